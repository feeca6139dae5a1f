from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from nodalcone.polyalg import (
    OrthogonalAffineMap,
    Polynomial,
    arith,
    compose_affine,
    divides,
    evaluate,
    homogeneous_components,
    iterated_laplacians,
    laplacian,
)
from strategies import SYMBOLS, from_sympy, homogeneous_polynomials, polynomials, small_fractions, to_sympy

x, y = Polynomial.variables(2)
X, Y, Z = Polynomial.variables(3)


def sympy_laplacian(P: Polynomial) -> Polynomial:
    e = to_sympy(P)
    return from_sympy(sum(sympy.diff(e, s, 2) for s in SYMBOLS[: P.dimension]), P.dimension)


# -- arithmetic ---------------------------------------------------------------


def test_additive_inverse_is_zero():
    assert arith(x, -x, "add").is_zero()
    assert arith(x, -x, "add").terms == {}


def test_difference_of_squares():
    assert arith(x + y, x - y, "mul") == x**2 - y**2


@pytest.mark.parametrize("seed", range(10))
def test_multiplicative_identity(seed):
    rng = np.random.default_rng(seed)
    terms = {tuple(int(v) for v in rng.integers(0, 3, 2)): Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for _ in range(5)}
    P = Polynomial(2, terms)
    assert arith(P, Polynomial.constant(2, 1), "mul") == P


def test_scale_and_zero_pruning():
    P = arith(x + y, None, "scale", Fraction(0))
    assert P.is_zero()
    assert arith(x, None, "scale", Fraction(1, 3)).coefficient((1, 0)) == Fraction(1, 3)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        arith(x, X, "add")


# -- differential operators ---------------------------------------------------


def test_laplacian_examples():
    assert laplacian(x**2 * y) == 2 * y
    assert laplacian(x * y).is_zero()


def test_laplacian_of_radial_multiple_of_harmonic():
    psi = x**3 - 3 * x * y**2
    r2 = Polynomial.norm_squared(2)
    assert laplacian(r2 * psi) == 16 * psi
    assert sympy_laplacian(r2 * psi) == 16 * psi


def test_iterated_laplacians_examples():
    assert iterated_laplacians(x**2 * y) == [x**2 * y, 2 * y]
    assert iterated_laplacians(x * y) == [x * y]
    r2 = Polynomial.norm_squared(3)
    chain = iterated_laplacians(r2 * r2)
    assert chain == [r2 * r2, 20 * r2, Polynomial.constant(3, 120)]
    assert chain[1] == sympy_laplacian(chain[0])
    assert chain[2] == sympy_laplacian(chain[1])
    assert iterated_laplacians(Polynomial.zero(2)) == [Polynomial.zero(2)]


@given(polynomials(max_degree=6))
def test_laplacian_matches_sympy(P):
    assert laplacian(P) == sympy_laplacian(P)


@given(polynomials(n=2, max_degree=6), polynomials(n=2, max_degree=6), small_fractions, small_fractions)
def test_laplacian_is_linear(P, Q, a, b):
    assert laplacian(P.scale(a) + Q.scale(b)) == laplacian(P).scale(a) + laplacian(Q).scale(b)


@given(st.integers(1, 3).flatmap(lambda n: polynomials(n=n, max_degree=5)))
def test_product_rule_with_norm_squared(P):
    n = P.dimension
    r2 = Polynomial.norm_squared(n)
    xs = Polynomial.variables(n)
    euler = sum((xi * P.diff(i) for i, xi in enumerate(xs)), Polynomial.zero(n))
    assert laplacian(r2 * P) == P.scale(2 * n) + euler.scale(4) + r2 * laplacian(P)


@given(st.integers(1, 3).flatmap(lambda n: homogeneous_polynomials(n)))
def test_euler_identity(P):
    xs = Polynomial.variables(P.dimension)
    euler = sum((xi * P.diff(i) for i, xi in enumerate(xs)), Polynomial.zero(P.dimension))
    assert euler == P.scale(P.degree)


@given(polynomials(max_degree=7))
def test_iterated_laplacians_terminate(P):
    chain = iterated_laplacians(P)
    assert len(chain) <= max(P.degree, 0) // 2 + 1
    assert laplacian(chain[-1]).is_zero()
    assert all(not c.is_zero() for c in chain) or P.is_zero()


# -- evaluation ---------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(x**2 * y, (2, 3)) == 12
    assert evaluate(Polynomial.zero(2), (7, Fraction(1, 3))) == 0
    assert evaluate(x**2 - y**2, (1, 1)) == 0


def test_evaluate_exact_and_float_paths():
    P = x**3 - Fraction(1, 3) * x * y + 2
    exact = evaluate(P, (Fraction(1, 2), "2/3"))
    assert isinstance(exact, Fraction)
    assert exact == Fraction(1, 8) - Fraction(1, 9) + 2
    assert evaluate(P, (0.5, 2 / 3)) == pytest.approx(float(exact), rel=1e-15)


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(x, (1, 2, 3))


@given(polynomials(n=3, max_degree=6))
@settings(max_examples=50)
def test_float_evaluation_matches_exact(P):
    pt = (Fraction(1, 3), Fraction(-2, 5), Fraction(7, 4))
    exact = float(evaluate(P, pt))
    approx = evaluate(P, tuple(float(v) for v in pt))
    assert approx == pytest.approx(exact, rel=1e-12, abs=1e-12 * max(1.0, P.max_abs_coefficient() * 10))


# -- homogeneous components ---------------------------------------------------


def test_homogeneous_components_examples():
    assert homogeneous_components(x**2 + y) == [(1, y), (2, x**2)]
    assert homogeneous_components(x * y) == [(2, x * y)]
    assert homogeneous_components(Polynomial.zero(2)) == []


@given(polynomials(max_degree=6))
def test_homogeneous_components_reconstruct(P):
    parts = homogeneous_components(P)
    assert sum((c for _, c in parts), Polynomial.zero(P.dimension)) == P
    for d, c in parts:
        assert c.is_homogeneous() and c.degree == d


# -- divisibility -------------------------------------------------------------


def test_divides_examples():
    assert divides(y, x**2 * y) == x**2
    assert divides(x - y, x**2 - y**2) == x + y
    assert divides(x * y, x**2 + y**2) is None


def test_divides_rejects_zero_divisor():
    with pytest.raises(ValueError):
        divides(Polynomial.zero(2), x)


def sympy_divides(Psi: Polynomial, G: Polynomial) -> Polynomial | None:
    """Dense linear solve over the quotient's monomial basis, done by sympy."""
    n = Psi.dimension
    xs = SYMBOLS[:n]
    d = G.degree - Psi.degree
    if d < 0:
        return None if not G.is_zero() else Polynomial.zero(n)
    monos = list(sympy.itermonomials(xs, d))
    unknowns = sympy.symbols(f"q0:{len(monos)}")
    Q = sum(u * m for u, m in zip(unknowns, monos))
    residual = sympy.Poly(sympy.expand(to_sympy(Psi) * Q - to_sympy(G)), *xs)
    sol = sympy.solve(residual.coeffs(), unknowns, dict=True)
    if not sol:
        return None
    return from_sympy(Q.subs(sol[0]).subs({u: 0 for u in unknowns}), n)


@given(polynomials(n=2, max_degree=3), polynomials(n=2, max_degree=3))
@settings(max_examples=40, deadline=None)
def test_divides_agrees_with_dense_solve(Psi, Q):
    if Psi.is_zero():
        return
    G = Psi * Q
    assert divides(Psi, G) == sympy_divides(Psi, G)
    perturbed = G + Polynomial.variable(2, 0) ** (G.degree + 1 if not G.is_zero() else 1)
    assert divides(Psi, perturbed) == sympy_divides(Psi, perturbed)


@given(polynomials(n=3, max_degree=3), polynomials(n=3, max_degree=4))
@settings(max_examples=60, deadline=None)
def test_divides_soundness(Psi, G):
    if Psi.is_zero():
        return
    Q = divides(Psi, G)
    if Q is not None:
        assert Psi * Q == G
    assert divides(Psi, Psi * G) == G


# -- orthogonal maps ----------------------------------------------------------


def test_compose_affine_examples():
    flip_x = OrthogonalAffineMap.reflection([1, 0])
    assert compose_affine(x, flip_x) == -x
    P = x**3 * y - 2 * y + 1
    assert compose_affine(P, OrthogonalAffineMap.identity(2)) == P
    assert compose_affine(x**2 - y**2, OrthogonalAffineMap.permutation([1, 0])) == y**2 - x**2


def test_compose_affine_translation():
    shift = OrthogonalAffineMap(np.eye(2, dtype=int).tolist(), [Fraction(1), Fraction(-2)])
    assert compose_affine(x * y, shift) == (x + 1) * (y - 2)


def test_non_orthogonal_rejected():
    with pytest.raises(ValueError):
        OrthogonalAffineMap([[1, 1], [0, 1]])


def test_rational_rotation_is_exact():
    R = OrthogonalAffineMap([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]])
    assert R.is_orthogonal()
    r2 = Polynomial.norm_squared(2)
    assert compose_affine(r2, R) == r2


rational_maps = st.sampled_from(
    [
        OrthogonalAffineMap.reflection([1, 0, 0]),
        OrthogonalAffineMap.reflection([1, -1, 0]),
        OrthogonalAffineMap.reflection([0, 1, 0], 1),
        OrthogonalAffineMap.permutation([2, 0, 1]),
        OrthogonalAffineMap([[Fraction(3, 5), Fraction(-4, 5), 0], [Fraction(4, 5), Fraction(3, 5), 0], [0, 0, 1]], [1, 0, Fraction(1, 2)]),
    ]
)


@given(polynomials(n=3, max_degree=4), rational_maps, rational_maps)
@settings(max_examples=60, deadline=None)
def test_compose_affine_is_group_action(P, A, B):
    # P∘A then ∘B equals P∘(A∘B) with (A∘B)(x) = A(B(x))
    assert compose_affine(compose_affine(P, A), B) == compose_affine(P, A.compose(B))


@given(polynomials(n=3, max_degree=4), st.sampled_from([[1, 0, 0], [1, -1, 0], [1, 2, 2]]), st.sampled_from([0, 1, Fraction(-3, 2)]))
@settings(max_examples=40, deadline=None)
def test_reflections_are_involutions(P, normal, offset):
    S = OrthogonalAffineMap.reflection(normal, offset)
    assert compose_affine(compose_affine(P, S), S) == P


# -- serialization ------------------------------------------------------------


@given(polynomials(max_degree=5))
def test_json_round_trip_is_bit_exact(P):
    data = P.to_json()
    assert Polynomial.from_json(data) == P
    assert Polynomial.from_json(data).to_json() == data


def test_json_terms_in_graded_lex_order():
    P = y**2 + x + x**2 + 3
    exps = [tuple(t["exps"]) for t in P.to_json()["terms"]]
    assert exps == [(2, 0), (0, 2), (1, 0), (0, 0)]
