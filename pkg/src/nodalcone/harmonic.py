"""Harmonic decomposition of homogeneous polynomials and harmonic-divisor search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._linalg import nullspace
from .polyalg import Polynomial, divides, iterated_laplacians, monomials

DEFAULT_MAX_EXTRA_DEGREE = 8


@dataclass(frozen=True)
class HarmonicDecomposition:
    """``G = h_k + |x|^2 h_{k-2} + |x|^4 h_{k-4} + ...`` with every ``h`` harmonic."""

    degree: int
    components: tuple[Polynomial, ...]

    def reconstruct(self) -> Polynomial:
        n = self.components[0].dimension
        r2 = Polynomial.norm_squared(n)
        total = Polynomial.zero(n)
        weight = Polynomial.constant(n, 1)
        for h in self.components:
            total = total + weight * h
            weight = weight * r2
        return total

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "components": [
                {"degree": self.degree - 2 * j, "harmonic": h.to_json()}
                for j, h in enumerate(self.components)
            ],
        }


@dataclass(frozen=True)
class HarmonicMultipleWitness:
    """Outcome of :func:`find_harmonic_multiple`.

    ``quotient`` is set when found; ``searched_up_to`` records the degree bound.
    """

    quotient: Polynomial | None
    searched_up_to: int

    @property
    def found(self) -> bool:
        return self.quotient is not None

    def to_json(self) -> dict:
        if self.quotient is None:
            return {"status": "NotFoundUpTo", "max_degree": self.searched_up_to}
        return {"status": "Found", "quotient": self.quotient.to_json(), "max_degree": self.searched_up_to}


def _require_homogeneous(G: Polynomial) -> None:
    degrees = sorted({sum(e) for e in G.terms})
    if len(degrees) > 1:
        raise ValueError(f"polynomial is not homogeneous: mixed degrees {degrees}")
    if G.euler() != G.scale(G.degree):
        raise ValueError("Euler identity failed; polynomial is not homogeneous")


def _peel_constant(n: int, m: int, j: int) -> int:
    """``Δ^j (|x|^{2j} h) = c h`` for harmonic ``h`` homogeneous of degree ``m``."""
    return math.prod(2 * i * (2 * i + 2 * m + n - 2) for i in range(1, j + 1))


def gauss_decompose(G: Polynomial) -> HarmonicDecomposition:
    """Split a nonzero homogeneous ``G`` into its harmonic layers.

    The lowest layer is isolated first: ``Δ^J`` annihilates every term
    ``|x|^{2j} h`` with ``j < J`` and maps the ``j = J`` term to a known
    multiple of ``h``.  Subtracting it and repeating with ``J - 1`` peels the
    layers off from the bottom.
    """
    if G.is_zero():
        raise ValueError("cannot decompose the zero polynomial")
    _require_homogeneous(G)
    n, k = G.dimension, G.degree
    r2 = Polynomial.norm_squared(n)
    residual = G
    layers: dict[int, Polynomial] = {}
    for j in range(k // 2, 0, -1):
        m = k - 2 * j
        top = residual
        for _ in range(j):
            top = top.laplacian()
        h = top / _peel_constant(n, m, j)
        layers[j] = h
        residual = residual - (r2**j) * h
    layers[0] = residual
    components = tuple(layers[j] for j in range(k // 2 + 1))
    for h in components:
        if not h.laplacian().is_zero():
            raise ArithmeticError("harmonic peeling produced a non-harmonic layer")
    return HarmonicDecomposition(k, components)


def divides_all_laplacians(Psi: Polynomial, G: Polynomial) -> bool:
    return laplacian_quotient_chain(Psi, G) is not None


def laplacian_quotient_chain(Psi: Polynomial, G: Polynomial) -> list[tuple[Polynomial, Polynomial]] | None:
    """Pairs ``(Δ^s G, Δ^s G / Psi)`` over the nonzero chain, or ``None`` at the first failure."""
    if Psi.is_zero():
        raise ValueError("Psi must be nonzero")
    chain = []
    for lap in iterated_laplacians(G):
        if lap.is_zero():
            continue
        q = divides(Psi, lap)
        if q is None:
            return None
        chain.append((lap, q))
    return chain


def _laplacian_of_product_matrix(P: Polynomial, d: int):
    basis = monomials(P.dimension, d)
    columns = [(P * Polynomial(P.dimension, {m: 1})).laplacian() for m in basis]
    row_keys = sorted({e for col in columns for e in col.terms}, reverse=True)
    index = {e: i for i, e in enumerate(row_keys)}
    matrix = [[Fraction(0)] * len(basis) for _ in row_keys]
    for j, col in enumerate(columns):
        for e, c in col.terms.items():
            matrix[index[e]][j] = c
    return basis, matrix


def find_harmonic_multiple(P: Polynomial, max_degree: int = DEFAULT_MAX_EXTRA_DEGREE) -> HarmonicMultipleWitness:
    """Search for nonzero homogeneous ``Q`` with ``deg Q <= max_degree`` and ``Δ(P Q) = 0``.

    Degrees are tried in increasing order; the first nonzero null space of
    ``Q -> Δ(P Q)`` yields the witness (its first basis vector, made primitive).
    """
    if P.is_zero():
        raise ValueError("P must be nonzero")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    _require_homogeneous(P)
    for d in range(max_degree + 1):
        basis, matrix = _laplacian_of_product_matrix(P, d)
        if not matrix:
            # Δ(PQ) vanishes identically at this degree
            return HarmonicMultipleWitness(Polynomial(P.dimension, {basis[-1]: 1}), max_degree)
        kernel = nullspace(matrix, len(basis))
        if kernel:
            Q = Polynomial(P.dimension, dict(zip(basis, kernel[0]))).primitive()
            return HarmonicMultipleWitness(Q, max_degree)
    return HarmonicMultipleWitness(None, max_degree)
