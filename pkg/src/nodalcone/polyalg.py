"""Exact sparse multivariate polynomials over the rationals.

A :class:`Polynomial` is an immutable map from exponent tuples to
:class:`fractions.Fraction` coefficients.  Floats are accepted anywhere a
coefficient is expected and are converted exactly (``Fraction(0.1)`` is the
dyadic rational nearest 0.1), so arithmetic never rounds.
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "OrthogonalAffineMap",
    "arith",
    "laplacian",
    "iterated_laplacians",
    "evaluate",
    "homogeneous_components",
    "divides",
    "compose_affine",
    "monomials",
    "to_fraction",
]


def to_fraction(value) -> Fraction:
    """Convert ints, floats, Fractions and ``"p/q"`` strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(float(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ZeroDivisionError as exc:
            raise ValueError(f"zero denominator in {value!r}") from exc
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def _grlex_key(exps: tuple[int, ...]) -> tuple:
    return (sum(exps), exps)


def monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples in ``n`` variables of total degree ``degree``, grlex-descending."""
    if degree < 0:
        return []
    out = []
    for combo in combinations_with_replacement(range(n), degree):
        exps = [0] * n
        for i in combo:
            exps[i] += 1
        out.append(tuple(exps))
    out.sort(reverse=True)
    return out


class Polynomial:
    """Immutable sparse polynomial in ``dimension`` variables with rational coefficients."""

    __slots__ = ("dimension", "_terms", "__dict__")

    def __init__(self, dimension: int, terms: Mapping[Sequence[int], object] | None = None):
        if int(dimension) != dimension or dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {dimension!r}")
        self.dimension = int(dimension)
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, coeff in (terms or {}).items():
            key = tuple(int(e) for e in exps)
            if len(key) != self.dimension:
                raise ValueError(
                    f"exponent vector {key} has length {len(key)}, expected {self.dimension}"
                )
            if any(e < 0 for e in key):
                raise ValueError(f"negative exponent in {key}")
            c = to_fraction(coeff)
            if c:
                clean[key] = clean.get(key, Fraction(0)) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        exps = [0] * n
        exps[i] = 1
        return cls(n, {tuple(exps): 1})

    @classmethod
    def variables(cls, n: int) -> list["Polynomial"]:
        return [cls.variable(n, i) for i in range(n)]

    @classmethod
    def linear(cls, coeffs: Sequence, constant=0) -> "Polynomial":
        """The affine form ``sum(coeffs[i] * x_i) + constant``."""
        n = len(coeffs)
        terms = {(0,) * n: constant}
        for i, a in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = a
        return cls(n, terms)

    @classmethod
    def norm_squared(cls, n: int) -> "Polynomial":
        """``|x|^2`` in ``n`` variables."""
        return cls(n, {tuple(2 if j == i else 0 for j in range(n)): 1 for i in range(n)})

    # -- basic protocol ------------------------------------------------------

    @property
    def terms(self) -> Mapping[tuple[int, ...], Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    @cached_property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def is_constant(self) -> bool:
        return self.degree <= 0

    def sorted_terms(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Terms in descending graded-lexicographic order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def leading_term(self) -> tuple[tuple[int, ...], Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        exps = max(self._terms, key=_grlex_key)
        return exps, self._terms[exps]

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def max_abs_coefficient(self) -> float:
        return float(max((abs(c) for c in self._terms.values()), default=0))

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.dimension == other.dimension and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.dimension, other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.dimension, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({self.dimension}, {self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        names = variable_names(self.dimension)
        parts = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exps) if e
            )
            if not mono:
                s = str(c)
            elif c == 1:
                s = mono
            elif c == -1:
                s = "-" + mono
            else:
                s = f"({c})*{mono}" if c.denominator != 1 else f"{c}*{mono}"
            parts.append(s)
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self.dimension != other.dimension:
            raise ValueError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.dimension, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        return Polynomial(self.dimension, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dimension, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def scale(self, c) -> "Polynomial":
        c = to_fraction(c)
        return Polynomial(self.dimension, {e: c * v for e, v in self._terms.items()})

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial(self.dimension, out)

    def __rmul__(self, other) -> "Polynomial":
        return self.scale(other)

    def __truediv__(self, c) -> "Polynomial":
        return self.scale(1 / to_fraction(c))

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.dimension, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus ------------------------------------------------------------

    def diff(self, i: int, order: int = 1) -> "Polynomial":
        out = {}
        for e, c in self._terms.items():
            if e[i] < order:
                continue
            f = math.perm(e[i], order)
            new = list(e)
            new[i] -= order
            out[tuple(new)] = c * f
        return Polynomial(self.dimension, out)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.dimension)]

    def laplacian(self) -> "Polynomial":
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self._terms.items():
            for i, ei in enumerate(e):
                if ei >= 2:
                    new = list(e)
                    new[i] -= 2
                    key = tuple(new)
                    out[key] = out.get(key, 0) + c * ei * (ei - 1)
        return Polynomial(self.dimension, out)

    def euler(self) -> "Polynomial":
        """``sum_i x_i d_i P``; equals ``k P`` on homogeneous input of degree ``k``."""
        return Polynomial(self.dimension, {e: c * sum(e) for e, c in self._terms.items()})

    def homogeneous_part(self, degree: int) -> "Polynomial":
        return Polynomial(self.dimension, {e: c for e, c in self._terms.items() if sum(e) == degree})

    def reflect_argument(self) -> "Polynomial":
        """``P(-x)``."""
        return Polynomial(
            self.dimension, {e: (-c if sum(e) % 2 else c) for e, c in self._terms.items()}
        )

    def primitive(self) -> "Polynomial":
        """Scale to coprime integer coefficients with positive leading coefficient."""
        if not self._terms:
            return self
        den = math.lcm(*(c.denominator for c in self._terms.values()))
        num = math.gcd(*(int(c * den) for c in self._terms.values()))
        _, lead = self.leading_term()
        sign = 1 if lead > 0 else -1
        return self.scale(Fraction(sign * den, num))

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x):
        return evaluate(self, x)

    @cached_property
    def _horner(self):
        return _build_horner(self.sorted_terms(), 0, self.dimension)

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorised float evaluation at the rows of ``points`` (shape ``(m, n)``)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[-1] != self.dimension:
            raise ValueError(f"points have {pts.shape[-1]} coordinates, expected {self.dimension}")
        flat = pts.reshape(-1, self.dimension)
        out = _eval_horner(self._horner, flat, 0)
        if np.isscalar(out) or np.ndim(out) == 0:
            out = np.full(flat.shape[0], float(out))
        return out.reshape(pts.shape[:-1])

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "terms": [
                {"exps": list(e), "coeff": _fraction_str(c)} for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        if set(data) != {"dimension", "terms"}:
            raise ValueError(f"polynomial JSON must have exactly keys dimension, terms; got {sorted(data)}")
        n = data["dimension"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("polynomial dimension must be an integer")
        terms: dict[tuple[int, ...], Fraction] = {}
        for t in data["terms"]:
            if set(t) != {"exps", "coeff"}:
                raise ValueError(f"term must have exactly keys exps, coeff; got {sorted(t)}")
            key = tuple(t["exps"])
            if key in terms:
                raise ValueError(f"duplicate exponent vector {list(key)}")
            terms[key] = t["coeff"]
        return cls(n, terms)


def _fraction_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def variable_names(n: int) -> list[str]:
    return ["x", "y", "z"][:n] if n <= 3 else [f"x{i + 1}" for i in range(n)]


def _build_horner(terms, var: int, n: int):
    """Nested Horner layout: for variable ``var``, a list of (power, sub-layout) pairs."""
    if var == n:
        return float(sum(c for _, c in terms))
    groups: dict[int, list] = {}
    for e, c in terms:
        groups.setdefault(e[var], []).append((e, c))
    return sorted(
        ((p, _build_horner(g, var + 1, n)) for p, g in groups.items()), reverse=True
    )


def _eval_horner(layout, pts: np.ndarray, var: int):
    if not isinstance(layout, list):
        return layout
    if not layout:
        return 0.0
    x = pts[:, var]
    acc = None
    prev = None
    for p, sub in layout:
        val = _eval_horner(sub, pts, var + 1)
        if acc is None:
            acc = val
        else:
            acc = acc * x ** (prev - p) + val
        prev = p
    return acc * x**prev if prev else acc


# -- module-level operations --------------------------------------------------


def arith(P: Polynomial, Q: Polynomial | None, op: str, c=None) -> Polynomial:
    """Dispatch ``add``, ``sub``, ``mul`` or ``scale`` (the latter takes ``c``)."""
    if op == "scale":
        return P.scale(c)
    if Q is None:
        raise ValueError(f"operation {op!r} needs two polynomials")
    if op == "add":
        return P + Q
    if op == "sub":
        return P - Q
    if op == "mul":
        return P * Q
    raise ValueError(f"unknown operation {op!r}")


def laplacian(P: Polynomial) -> Polynomial:
    return P.laplacian()


def iterated_laplacians(P: Polynomial) -> list[Polynomial]:
    """``[P, ΔP, ..., Δ^m P]`` with ``Δ^m P != 0 == Δ^{m+1} P``; ``[0]`` for ``P = 0``."""
    if P.is_zero():
        return [P]
    chain = [P]
    while True:
        nxt = chain[-1].laplacian()
        if nxt.is_zero():
            return chain
        chain.append(nxt)


def evaluate(P: Polynomial, x):
    """Evaluate ``P`` at one point.

    Exact (a :class:`Fraction`) when every coordinate is an int, Fraction or
    rational string; otherwise a float computed by nested Horner.
    """
    if len(x) != P.dimension:
        raise ValueError(f"point has {len(x)} coordinates, expected {P.dimension}")
    if all(isinstance(v, (int, Fraction, str)) and not isinstance(v, bool) for v in x):
        xs = [to_fraction(v) for v in x]
        total = Fraction(0)
        for e, c in P.terms.items():
            term = c
            for xi, ei in zip(xs, e):
                if ei:
                    term *= xi**ei
            total += term
        return total
    return float(P.evaluate_many(np.asarray([float(v) for v in x]))[0])


def homogeneous_components(P: Polynomial) -> list[tuple[int, Polynomial]]:
    degrees = sorted({sum(e) for e in P.terms})
    return [(d, P.homogeneous_part(d)) for d in degrees]


def divides(Psi: Polynomial, G: Polynomial) -> Polynomial | None:
    """Return ``Q`` with ``Psi * Q == G`` exactly, or ``None`` if no such polynomial exists.

    Solves for the quotient coefficients by eliminating the grlex-leading
    monomial of the residual one coefficient at a time.  A single polynomial
    generates its ideal with itself as leading-term basis, so a nonzero final
    residual proves that no quotient exists.
    """
    if Psi.is_zero():
        raise ValueError("divisor must be nonzero")
    Psi._check(G)
    lead_e, lead_c = Psi.leading_term()
    quotient: dict[tuple[int, ...], Fraction] = {}
    residual = dict(G.terms)
    psi_terms = list(Psi.terms.items())
    while residual:
        e = max(residual, key=_grlex_key)
        if any(a < b for a, b in zip(e, lead_e)):
            return None
        shift = tuple(a - b for a, b in zip(e, lead_e))
        q = residual[e] / lead_c
        quotient[shift] = quotient.get(shift, 0) + q
        for pe, pc in psi_terms:
            key = tuple(a + b for a, b in zip(pe, shift))
            val = residual.get(key, 0) - q * pc
            if val:
                residual[key] = val
            else:
                residual.pop(key, None)
    return Polynomial(G.dimension, quotient)


def division_residual(Psi: Polynomial, G: Polynomial) -> tuple[Polynomial, Polynomial]:
    """Quotient and remainder of grlex division; the remainder has no term divisible by ``LT(Psi)``."""
    if Psi.is_zero():
        raise ValueError("divisor must be nonzero")
    Psi._check(G)
    lead_e, lead_c = Psi.leading_term()
    quotient: dict[tuple[int, ...], Fraction] = {}
    remainder: dict[tuple[int, ...], Fraction] = {}
    residual = dict(G.terms)
    psi_terms = list(Psi.terms.items())
    while residual:
        e = max(residual, key=_grlex_key)
        if any(a < b for a, b in zip(e, lead_e)):
            remainder[e] = residual.pop(e)
            continue
        shift = tuple(a - b for a, b in zip(e, lead_e))
        q = residual[e] / lead_c
        quotient[shift] = quotient.get(shift, 0) + q
        for pe, pc in psi_terms:
            key = tuple(a + b for a, b in zip(pe, shift))
            val = residual.get(key, 0) - q * pc
            if val:
                residual[key] = val
            else:
                residual.pop(key, None)
    return Polynomial(G.dimension, quotient), Polynomial(G.dimension, remainder)


class OrthogonalAffineMap:
    """``x -> matrix @ x + translation`` with orthogonal ``matrix``.

    Entries may be rationals (checked exactly) or floats (checked to 1e-12).
    """

    __slots__ = ("matrix", "translation", "exact")

    def __init__(self, matrix, translation=None, *, check: bool = True):
        rows = [tuple(r) for r in matrix]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("matrix must be square")
        exact = all(
            isinstance(v, (int, Fraction)) and not isinstance(v, bool) for r in rows for v in r
        )
        if translation is None:
            translation = (0,) * n
        translation = tuple(translation)
        if len(translation) != n:
            raise ValueError("translation length does not match matrix size")
        exact = exact and all(isinstance(v, (int, Fraction)) for v in translation)
        if exact:
            rows = [tuple(Fraction(v) for v in r) for r in rows]
            translation = tuple(Fraction(v) for v in translation)
        else:
            rows = [tuple(float(v) for v in r) for r in rows]
            translation = tuple(float(v) for v in translation)
        self.matrix = tuple(rows)
        self.translation = translation
        self.exact = exact
        if check and not self.is_orthogonal():
            raise ValueError("matrix is not orthogonal")

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    def is_orthogonal(self) -> bool:
        n = self.dimension
        if self.exact:
            for i in range(n):
                for j in range(n):
                    s = sum(self.matrix[k][i] * self.matrix[k][j] for k in range(n))
                    if s != (1 if i == j else 0):
                        return False
            return True
        A = np.array(self.matrix, dtype=float)
        return bool(np.max(np.abs(A.T @ A - np.eye(n))) <= 1e-12)

    @classmethod
    def identity(cls, n: int) -> "OrthogonalAffineMap":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def reflection(cls, normal: Sequence, offset=0) -> "OrthogonalAffineMap":
        """Reflection across ``{x : normal . x = offset}``; ``normal`` need not be unit.

        Rational input yields an exact map even when the unit normal is irrational.
        """
        exact = all(isinstance(v, (int, Fraction)) for v in (*normal, offset))
        if exact:
            a = [Fraction(v) for v in normal]
            c = Fraction(offset)
            nn = sum(v * v for v in a)
            if nn == 0:
                raise ValueError("zero normal")
            n = len(a)
            M = [[int(i == j) - 2 * a[i] * a[j] / nn for j in range(n)] for i in range(n)]
            b = [2 * c * a[i] / nn for i in range(n)]
            return cls(M, b)
        a = np.asarray(normal, dtype=float)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            raise ValueError("zero normal")
        c = float(offset) / nrm
        a = a / nrm
        M = np.eye(len(a)) - 2 * np.outer(a, a)
        return cls(M.tolist(), (2 * c * a).tolist())

    @classmethod
    def permutation(cls, perm: Sequence[int]) -> "OrthogonalAffineMap":
        n = len(perm)
        return cls([[int(perm[i] == j) for j in range(n)] for i in range(n)])

    def apply(self, x):
        n = self.dimension
        if self.exact and all(isinstance(v, (int, Fraction)) for v in x):
            return tuple(
                sum(self.matrix[i][j] * Fraction(x[j]) for j in range(n)) + self.translation[i]
                for i in range(n)
            )
        A = np.array(self.matrix, dtype=float)
        return tuple(A @ np.asarray(x, dtype=float) + np.asarray(self.translation, dtype=float))

    def linear_part(self) -> "OrthogonalAffineMap":
        return OrthogonalAffineMap(self.matrix, check=False)

    def inverse(self) -> "OrthogonalAffineMap":
        n = self.dimension
        At = [[self.matrix[j][i] for j in range(n)] for i in range(n)]
        b = [-sum(At[i][j] * self.translation[j] for j in range(n)) for i in range(n)]
        return OrthogonalAffineMap(At, b, check=False)

    def compose(self, other: "OrthogonalAffineMap") -> "OrthogonalAffineMap":
        """``self ∘ other``: ``x -> self(other(x))``."""
        n = self.dimension
        A, B = self.matrix, other.matrix
        M = [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        b = [sum(A[i][k] * other.translation[k] for k in range(n)) + self.translation[i] for i in range(n)]
        return OrthogonalAffineMap(M, b, check=False)

    def __repr__(self) -> str:
        return f"OrthogonalAffineMap(matrix={self.matrix}, translation={self.translation})"


def compose_affine(P: Polynomial, A: OrthogonalAffineMap) -> Polynomial:
    """``x -> P(A.matrix @ x + A.translation)``, expanded exactly.

    Float entries are converted to their exact binary rationals first.
    """
    n = P.dimension
    if A.dimension != n:
        raise ValueError(f"dimension mismatch: polynomial {n}, map {A.dimension}")
    images = [
        Polynomial.linear([to_fraction(v) for v in A.matrix[i]], to_fraction(A.translation[i]))
        for i in range(n)
    ]
    cache: dict[tuple[int, int], Polynomial] = {}

    def power(i: int, k: int) -> Polynomial:
        if (i, k) not in cache:
            cache[(i, k)] = images[i] ** k
        return cache[(i, k)]

    acc: dict[tuple[int, ...], Fraction] = {}
    for e, c in P.terms.items():
        term = Polynomial.constant(n, c)
        for i, k in enumerate(e):
            if k:
                term = term * power(i, k)
        for te, tc in term.terms.items():
            acc[te] = acc.get(te, 0) + tc
    return Polynomial(n, acc)
