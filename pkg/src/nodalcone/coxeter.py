"""Reflection geometry of point sources: hyperplanes, mirror points, reflection closure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .polyalg import OrthogonalAffineMap, Polynomial, compose_affine, to_fraction

DEDUP_TOL = 1e-9
DEFAULT_MAX_PLANES = 64
GROUP_ENUMERATION_CAP = 100_000


def _is_rational_vector(v) -> bool:
    return all(isinstance(c, (int, Fraction)) and not isinstance(c, bool) for c in v)


def _primitive_form(a: Sequence[Fraction], c: Fraction) -> tuple[tuple[Fraction, ...], Fraction]:
    vals = [Fraction(v) for v in (*a, c)]
    den = math.lcm(*(v.denominator for v in vals))
    ints = [int(v * den) for v in vals]
    g = math.gcd(*ints) or 1
    ints = [v // g for v in ints]
    lead = next(v for v in ints[:-1] if v)
    if lead < 0:
        ints = [-v for v in ints]
    return tuple(Fraction(v) for v in ints[:-1]), Fraction(ints[-1])


@dataclass(frozen=True)
class Hyperplane:
    """``{x : normal . x = offset}`` with unit ``normal`` in canonical sign.

    ``exact`` optionally carries a rational form ``(a, c)`` of the same plane
    (``a . x = c``, primitive integers); it is kept through reflections when
    possible so rational mirror systems stay exact.
    """

    normal: tuple[float, ...]
    offset: float
    exact: tuple[tuple[Fraction, ...], Fraction] | None = field(default=None, compare=False)

    @classmethod
    def from_normal(cls, normal: Sequence, offset=0.0) -> "Hyperplane":
        if _is_rational_vector(normal) and _is_rational_vector([offset]):
            return cls.from_form(normal, offset)
        a = np.asarray(normal, dtype=float)
        nrm = float(np.linalg.norm(a))
        if nrm == 0.0:
            raise ValueError("hyperplane normal must be nonzero")
        u = a / nrm
        c = float(offset) / nrm
        u[np.abs(u) < 1e-14] = 0.0
        if abs(c) < 1e-14:
            c = 0.0
        # sign fixed by the first clearly nonzero component, robust to float noise
        lead = next(v for v in u if abs(v) > DEDUP_TOL)
        if lead < 0:
            u, c = -u, -c
        return cls(tuple(float(v) for v in u), float(c))

    @classmethod
    def from_form(cls, a: Sequence, c=0) -> "Hyperplane":
        """Exact plane ``a . x = c`` with rational ``a`` and ``c``."""
        a = [to_fraction(v) for v in a]
        c = to_fraction(c)
        if not any(a):
            raise ValueError("hyperplane normal must be nonzero")
        a, c = _primitive_form(a, c)
        nrm = math.sqrt(sum(float(v) ** 2 for v in a))
        u = tuple(float(v) / nrm for v in a)
        return cls(u, float(c) / nrm, (a, c))

    @property
    def dimension(self) -> int:
        return len(self.normal)

    def linear_form(self) -> Polynomial:
        """``a . x - c`` (exact form if known, else the float normal as binary rationals)."""
        if self.exact is not None:
            a, c = self.exact
            return Polynomial.linear(a, -c)
        return Polynomial.linear([to_fraction(v) for v in self.normal], -to_fraction(self.offset))

    def reflection(self) -> OrthogonalAffineMap:
        if self.exact is not None:
            return OrthogonalAffineMap.reflection(*self.exact)
        return OrthogonalAffineMap.reflection(self.normal, self.offset)

    def signed_distance(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        return pts @ np.asarray(self.normal) - self.offset

    def contains(self, x, tol: float = 1e-9) -> bool:
        if self.exact is not None and _is_rational_vector(x):
            a, c = self.exact
            return sum(ai * Fraction(xi) for ai, xi in zip(a, x)) == c
        return abs(float(self.signed_distance(x))) <= tol * max(1.0, float(np.linalg.norm(np.asarray(x, float))))

    def project(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        d = self.signed_distance(pts)
        return pts - np.multiply.outer(d, np.asarray(self.normal))

    def close_to(self, other: "Hyperplane", tol: float = DEDUP_TOL) -> bool:
        """Same plane: equal exact forms, or normals and offsets within ``tol``."""
        if self.exact is not None and other.exact is not None and self.exact == other.exact:
            return True
        return (
            max(abs(a - b) for a, b in zip(self.normal, other.normal)) <= tol
            and abs(self.offset - other.offset) <= tol
        )

    def to_json(self) -> dict:
        out = {"normal": list(self.normal), "offset": self.offset}
        if self.exact is not None:
            a, c = self.exact
            out["exact"] = {"normal": [str(v) for v in a], "offset": str(c)}
        return out

    @classmethod
    def from_json(cls, data) -> "Hyperplane":
        allowed = {"normal", "offset", "exact"}
        if not set(data) <= allowed or not {"normal", "offset"} <= set(data):
            raise ValueError(f"hyperplane JSON keys must be normal, offset[, exact]; got {sorted(data)}")
        if "exact" in data:
            ex = data["exact"]
            return cls.from_form([to_fraction(v) for v in ex["normal"]], to_fraction(ex["offset"]))
        normal = [to_fraction(v) if isinstance(v, str) else v for v in data["normal"]]
        offset = to_fraction(data["offset"]) if isinstance(data["offset"], str) else data["offset"]
        return cls.from_normal(normal, offset)

    def __str__(self) -> str:
        if self.exact is not None and all(abs(v) < 10**9 for v in (*self.exact[0], self.exact[1])):
            return f"{self.linear_form()} = 0"
        terms = " + ".join(f"{v:.6g}*x{i + 1}" for i, v in enumerate(self.normal) if v)
        return f"{terms} = {self.offset:.6g}"


@dataclass(frozen=True)
class AffineSubspace:
    """``basepoint + span(basis)`` with an orthonormal basis."""

    basepoint: tuple[float, ...]
    basis: tuple[tuple[float, ...], ...] = ()

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, x, tol: float = 1e-9) -> bool:
        d = np.asarray(x, float) - np.asarray(self.basepoint)
        for b in self.basis:
            d = d - np.dot(d, b) * np.asarray(b)
        return float(np.linalg.norm(d)) <= tol

    def to_json(self) -> dict:
        return {"basepoint": list(self.basepoint), "basis": [list(b) for b in self.basis]}

    @classmethod
    def from_json(cls, data) -> "AffineSubspace":
        return cls(tuple(float(v) for v in data["basepoint"]), tuple(tuple(float(v) for v in b) for b in data["basis"]))


@dataclass(frozen=True)
class FiniteDistribution:
    """``f = sum_i T_{G_i}`` placed at ``y_i``: the functional ``phi -> sum_i G_i(∂) phi(y_i)``."""

    dimension: int
    sources: tuple[tuple[tuple[Fraction, ...], Polynomial], ...]

    def __post_init__(self):
        clean = []
        for point, weight in self.sources:
            pt = tuple(to_fraction(v) for v in point)
            if len(pt) != self.dimension or weight.dimension != self.dimension:
                raise ValueError("source point and weight must match the ambient dimension")
            if not weight.is_zero():
                clean.append((pt, weight))
        if not clean:
            raise ValueError("a finitely supported distribution needs a nonzero weight")
        for (p, _), (q, _) in combinations(clean, 2):
            if p == q or _float_dist(p, q) <= 1e-9:
                raise ValueError(f"source points must be distinct: {p} and {q}")
        object.__setattr__(self, "sources", tuple(clean))

    @classmethod
    def single(cls, weight: Polynomial, point=None) -> "FiniteDistribution":
        n = weight.dimension
        return cls(n, ((tuple(point) if point is not None else (0,) * n, weight),))

    @classmethod
    def point_masses(cls, points: Iterable[Sequence], masses: Iterable) -> "FiniteDistribution":
        points = [tuple(p) for p in points]
        n = len(points[0])
        return cls(n, tuple((p, Polynomial.constant(n, m)) for p, m in zip(points, masses)))

    @property
    def points(self) -> list[tuple[Fraction, ...]]:
        return [p for p, _ in self.sources]

    def points_array(self) -> np.ndarray:
        return np.array([[float(v) for v in p] for p in self.points], dtype=float)

    def max_weight_degree(self) -> int:
        return max(w.degree for _, w in self.sources)

    def scaled(self, c) -> "FiniteDistribution":
        return FiniteDistribution(self.dimension, tuple((p, w.scale(c)) for p, w in self.sources))

    def diameter(self) -> float:
        pts = self.points_array()
        if len(pts) < 2:
            return 0.0
        return float(max(np.linalg.norm(a - b) for a, b in combinations(pts, 2)))

    def pairing(self, derivative_value) -> float:
        """``<f, phi>`` given ``derivative_value(point, exps) = ∂^exps phi(point)``."""
        total = 0.0
        for p, w in self.sources:
            for e, c in w.terms.items():
                total += float(c) * derivative_value(p, e)
        return total

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "sources": [
                {"point": [str(v) for v in p], "weight": w.to_json()} for p, w in self.sources
            ],
        }


def _float_dist(p, q) -> float:
    return math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(p, q)))


@dataclass(frozen=True)
class CoxeterClosureResult:
    hyperplanes: tuple[Hyperplane, ...]
    closed: bool
    group_order: int | None = None
    common_point: tuple[float, ...] | None = None

    @property
    def status(self) -> str:
        return "Closed" if self.closed else "ExceededBound"

    def to_json(self) -> dict:
        out = {"status": self.status, "hyperplanes": [h.to_json() for h in self.hyperplanes]}
        if self.closed:
            out["group_order_bound"] = self.group_order
            out["common_point"] = None if self.common_point is None else list(self.common_point)
        return out


# -- operations ----------------------------------------------------------------


def mirror_point(y, H: Hyperplane):
    """Reflection of ``y`` across ``H`` (exact for rational ``y`` and exact ``H``)."""
    if H.exact is not None and _is_rational_vector(y):
        return H.reflection().apply(y)
    p = np.asarray(y, dtype=float)
    return tuple(p - 2 * (p @ np.asarray(H.normal) - H.offset) * np.asarray(H.normal))


def reflect_hyperplane(H: Hyperplane, M: Hyperplane) -> Hyperplane:
    """Image of ``H`` under the reflection about ``M``."""
    if H.exact is not None and M.exact is not None:
        sigma = M.reflection()
        a, c = H.exact
        # x on image  <=>  sigma(x) on H  <=>  (A^T a) . x = c - a . b
        A, b = sigma.matrix, sigma.translation
        n = len(a)
        new_a = [sum(A[k][i] * a[k] for k in range(n)) for i in range(n)]
        new_c = c - sum(ai * bi for ai, bi in zip(a, b))
        return Hyperplane.from_form(new_a, new_c)
    m = np.asarray(M.normal)
    u = np.asarray(H.normal)
    new_u = u - 2 * (u @ m) * m
    new_c = H.offset - 2 * M.offset * (u @ m)
    return Hyperplane.from_normal(new_u, new_c)


def _index_of(planes: list[Hyperplane], H: Hyperplane) -> int | None:
    for i, P in enumerate(planes):
        if P.close_to(H):
            return i
    return None


def dedupe_hyperplanes(planes: Iterable[Hyperplane]) -> list[Hyperplane]:
    out: list[Hyperplane] = []
    for H in planes:
        if _index_of(out, H) is None:
            out.append(H)
    return out


def closure(initial: Sequence[Hyperplane], max_planes: int = DEFAULT_MAX_PLANES) -> CoxeterClosureResult:
    """Close a hyperplane set under mutual reflections.

    Stops with ``closed=False`` as soon as more than ``max_planes`` distinct
    planes appear.
    """
    if not initial:
        raise ValueError("closure needs at least one hyperplane")
    planes = dedupe_hyperplanes(initial)
    if max_planes < len(planes):
        raise ValueError("max_planes is smaller than the initial set")
    done = 0
    while done < len(planes):
        i = done
        done += 1
        for j in range(len(planes)):
            for src, mir in ((i, j), (j, i)):
                img = reflect_hyperplane(planes[src], planes[mir])
                if _index_of(planes, img) is None:
                    planes.append(img)
                    if len(planes) > max_planes:
                        return CoxeterClosureResult(tuple(planes), False)
    order = _group_order(planes)
    return CoxeterClosureResult(tuple(planes), True, order, _common_point(planes))


def _common_point(planes: Sequence[Hyperplane]) -> tuple[float, ...] | None:
    N = np.array([h.normal for h in planes])
    c = np.array([h.offset for h in planes])
    x, *_ = np.linalg.lstsq(N, c, rcond=None)
    if float(np.max(np.abs(N @ x - c))) < 1e-8:
        return tuple(float(v) for v in x)
    return None


def _group_order(planes: Sequence[Hyperplane]) -> int | None:
    """Order of the group generated by the reflections, by breadth-first enumeration."""
    n = planes[0].dimension
    gens = []
    for h in planes:
        u = np.asarray(h.normal)
        M = np.eye(n + 1)
        M[:n, :n] -= 2 * np.outer(u, u)
        M[:n, n] = 2 * h.offset * u
        gens.append(M)

    def key(M):
        return tuple(np.round(M, 7).ravel() + 0.0)

    seen = {key(np.eye(n + 1))}
    frontier = [np.eye(n + 1)]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = s @ g
                k = key(h)
                if k not in seen:
                    seen.add(k)
                    nxt.append(h)
                    if len(seen) > GROUP_ENUMERATION_CAP:
                        return None
        frontier = nxt
    return len(seen)


def pullback(f: FiniteDistribution, sigma: OrthogonalAffineMap) -> FiniteDistribution:
    """``f ∘ sigma``, defined by ``<f ∘ sigma, phi> = <f, phi ∘ sigma^{-1}>``.

    A source ``(y, G)`` becomes ``(sigma^{-1}(y), G ∘ A)`` with ``A`` the linear
    part: the chain rule turns ``G(∂)`` acting on ``phi ∘ sigma^{-1}`` into
    ``G(A ∂)`` acting on ``phi``.
    """
    if sigma.dimension != f.dimension:
        raise ValueError("map and distribution dimensions differ")
    if not sigma.is_orthogonal():
        raise ValueError("pullback requires an orthogonal affine map")
    inv = sigma.inverse()
    lin = sigma.linear_part()
    sources = tuple((inv.apply(p), compose_affine(w, lin)) for p, w in f.sources)
    return FiniteDistribution(f.dimension, sources)


def distributions_close(f: FiniteDistribution, g: FiniteDistribution, rel_tol: float = 1e-10) -> bool:
    """Equality up to source ordering; exact data compares exactly."""
    if f.dimension != g.dimension or len(f.sources) != len(g.sources):
        return False
    unmatched = list(g.sources)
    for p, w in f.sources:
        hit = None
        for k, (q, v) in enumerate(unmatched):
            if p == q or _float_dist(p, q) <= 1e-9 * max(1.0, _float_dist(p, [0] * len(p))):
                hit = k
                break
        if hit is None:
            return False
        q, v = unmatched.pop(hit)
        diff = w - v
        if not diff.is_zero():
            scale = max(w.max_abs_coefficient(), v.max_abs_coefficient())
            if diff.max_abs_coefficient() > rel_tol * scale:
                return False
    return True


def is_odd(f: FiniteDistribution, H: Hyperplane) -> bool:
    """Whether ``f ∘ sigma_H = -f``."""
    return distributions_close(pullback(f, H.reflection()), f.scaled(-1))


def is_even(f: FiniteDistribution, H: Hyperplane) -> bool:
    return distributions_close(pullback(f, H.reflection()), f)


def mirror_support_check(f: FiniteDistribution, H: Hyperplane) -> bool:
    """Whether the support is invariant under reflection about ``H``."""
    pts = f.points
    for p in pts:
        m = mirror_point(p, H)
        if not any(m == q or _float_dist(m, q) <= 1e-9 * max(1.0, _float_dist(q, [0] * len(q))) for q in pts):
            return False
    return True


def perpendicular_bisector(p, q) -> Hyperplane:
    if _is_rational_vector(p) and _is_rational_vector(q):
        a = [Fraction(x) - Fraction(y) for x, y in zip(p, q)]
        c = (sum(Fraction(x) ** 2 for x in p) - sum(Fraction(y) ** 2 for y in q)) / 2
        return Hyperplane.from_form(a, c)
    p, q = np.asarray(p, float), np.asarray(q, float)
    return Hyperplane.from_normal(p - q, (p @ p - q @ q) / 2)


def candidate_mirrors(f: FiniteDistribution, extra: Iterable[Hyperplane] = ()) -> list[Hyperplane]:
    """Bisectors of support pairs (plus ``extra``) that leave the support invariant."""
    cands = [perpendicular_bisector(p, q) for p, q in combinations(f.points, 2)]
    cands.extend(extra)
    return [H for H in dedupe_hyperplanes(cands) if mirror_support_check(f, H)]


def span_support(f: FiniteDistribution, pivot_tol: float = 1e-10) -> AffineSubspace:
    """Affine hull of the support, orthonormalised by Gram-Schmidt."""
    pts = f.points_array()
    base = pts[0]
    basis: list[np.ndarray] = []
    for p in pts[1:]:
        v = p - base
        for b in basis:
            v = v - (v @ b) * b
        nrm = float(np.linalg.norm(v))
        if nrm > pivot_tol * max(1.0, float(np.linalg.norm(p - base))):
            basis.append(v / nrm)
    return AffineSubspace(tuple(float(v) for v in base), tuple(tuple(float(v) for v in b) for b in basis))


def hyperplane_through_points(points: Sequence[Sequence]) -> Hyperplane | None:
    """The unique hyperplane through ``n`` affinely independent points, else ``None``."""
    n = len(points[0])
    if len(points) < n:
        return None
    if all(_is_rational_vector(p) for p in points):
        from ._linalg import nullspace

        rows = [[Fraction(v) for v in p] + [Fraction(-1)] for p in points]
        kern = nullspace(rows, n + 1)
        if len(kern) != 1:
            return None
        v = kern[0]
        return Hyperplane.from_form(v[:n], v[n])
    A = np.hstack([np.asarray(points, float), -np.ones((len(points), 1))])
    _, s, vt = np.linalg.svd(A)
    if len(s) >= n and s[n - 1] < 1e-10 * s[0]:
        return None
    v = vt[-1]
    return Hyperplane.from_normal(v[:n], v[n])
