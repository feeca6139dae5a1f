"""Symbolic prediction of stationary sets and sampling of the predicted varieties."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .coxeter import (
    AffineSubspace,
    FiniteDistribution,
    Hyperplane,
    candidate_mirrors,
    closure,
    dedupe_hyperplanes,
    hyperplane_through_points,
    is_odd,
    span_support,
)
from .polyalg import (
    OrthogonalAffineMap,
    Polynomial,
    compose_affine,
    divides,
    division_residual,
    homogeneous_components,
    iterated_laplacians,
    to_fraction,
)

FLOAT_DIVISION_TOL = 1e-10

__all__ = [
    "AffineSubspace",
    "StationaryPrediction",
    "predict_single_point",
    "predict_distribution",
    "single_point_generators",
    "membership",
    "sample_zero_grid",
    "extract_hyperplanes",
    "sample_predicted_set",
    "estimate_distance",
    "DistanceEstimator",
    "far_points",
]


@dataclass(frozen=True)
class StationaryPrediction:
    """Predicted stationary set: common zeros of ``generators`` about ``basepoint``.

    Generators live in local coordinates ``z = x - basepoint``.  Hyperplanes
    are in global coordinates and are contained in the predicted set.  When
    ``containment_only`` is set the prediction is a subset of the true
    stationary set rather than the whole of it.
    """

    generators: tuple[Polynomial, ...]
    hyperplanes: tuple[Hyperplane, ...] = ()
    edge: AffineSubspace | None = None
    basepoint: tuple[Fraction, ...] = ()
    containment_only: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def dimension(self) -> int:
        return self.generators[0].dimension

    def is_empty(self) -> bool:
        """True when some generator is a nonzero constant."""
        return any(g.degree == 0 for g in self.generators)

    def basepoint_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.basepoint])

    def to_json(self) -> dict:
        return {
            "generators": [g.to_json() for g in self.generators],
            "generators_text": [str(g) for g in self.generators],
            "hyperplanes": [h.to_json() for h in self.hyperplanes],
            "edge": None if self.edge is None else self.edge.to_json(),
            "basepoint": [str(v) for v in self.basepoint],
            "containment_only": self.containment_only,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict) -> "StationaryPrediction":
        allowed = {"generators", "generators_text", "hyperplanes", "edge", "basepoint", "containment_only", "notes"}
        if not set(data) <= allowed or "generators" not in data:
            raise ValueError(f"unexpected prediction keys {sorted(set(data) - allowed)}")
        gens = tuple(Polynomial.from_json(g) for g in data["generators"])
        if not gens:
            raise ValueError("prediction needs at least one generator")
        n = gens[0].dimension
        base = tuple(to_fraction(v) for v in data.get("basepoint") or [0] * n)
        return cls(
            gens,
            tuple(Hyperplane.from_json(h) for h in data.get("hyperplanes", [])),
            None if data.get("edge") is None else AffineSubspace.from_json(data["edge"]),
            base,
            bool(data.get("containment_only", False)),
            tuple(data.get("notes", [])),
        )


def single_point_generators(G: Polynomial) -> list[Polynomial]:
    """Polynomials whose common zeros form the stationary set of one source with weight ``G``.

    For homogeneous ``G`` these are the nonzero iterated Laplacians.  For mixed
    degrees, ``G(∂)`` applied to a radial profile ``F(|x|^2/2)`` collects the
    ``F^{(p)}`` terms as ``sum_j (-1)^j Δ^j G_{p+j} / (2^j j!)``; each such sum
    must vanish separately.
    """
    if G.is_zero():
        raise ValueError("weight must be nonzero")
    if G.is_homogeneous():
        return [g for g in iterated_laplacians(G) if not g.is_zero()]
    parts = dict(homogeneous_components(G))
    chains = {m: iterated_laplacians(P) for m, P in parts.items()}
    gens = []
    for p in range(G.degree + 1):
        total = Polynomial.zero(G.dimension)
        for m, chain in chains.items():
            j = m - p
            if 0 <= j < len(chain):
                total = total + chain[j].scale(Fraction((-1) ** j, 2**j * math.factorial(j)))
        if not total.is_zero():
            gens.append(total)
    return gens


def predict_single_point(G: Polynomial, y=None, extra_candidates: Iterable[Hyperplane] = ()) -> StationaryPrediction:
    n = G.dimension
    base = tuple(to_fraction(v) for v in (y if y is not None else (0,) * n))
    gens = tuple(single_point_generators(G))
    planes: list[Hyperplane] = []
    if not any(g.degree == 0 for g in gens):
        local = [to_local(h, base) for h in extra_candidates]
        for g in sorted(gens, key=lambda p: p.degree):
            for H in extract_hyperplanes(g, None, local):
                if _divides_all(H, gens):
                    planes.append(H)
        planes = [to_global(H, base) for H in dedupe_hyperplanes(planes)]
    edge = AffineSubspace(tuple(float(v) for v in base), ())
    return StationaryPrediction(gens, tuple(planes), edge, base)


def _divides_all(H: Hyperplane, gens: Sequence[Polynomial]) -> bool:
    return all(hyperplane_divides(H, g) for g in gens)


def hyperplane_divides(H: Hyperplane, P: Polynomial) -> bool:
    """Exact divisibility for rational planes, else relative division residual below 1e-10."""
    form = H.linear_form()
    if H.exact is not None:
        return divides(form, P) is not None
    _, rem = division_residual(form, P)
    return rem.is_zero() or rem.max_abs_coefficient() <= FLOAT_DIVISION_TOL * max(P.max_abs_coefficient(), 1e-300)


def to_local(H: Hyperplane, base) -> Hyperplane:
    if H.exact is not None and all(isinstance(v, (int, Fraction)) for v in base):
        a, c = H.exact
        return Hyperplane.from_form(a, c - sum(ai * bi for ai, bi in zip(a, base)))
    b = np.array([float(v) for v in base])
    return Hyperplane.from_normal(H.normal, H.offset - float(np.dot(H.normal, b)))


def to_global(H: Hyperplane, base) -> Hyperplane:
    if H.exact is not None and all(isinstance(v, (int, Fraction)) for v in base):
        a, c = H.exact
        return Hyperplane.from_form(a, c + sum(ai * bi for ai, bi in zip(a, base)))
    b = np.array([float(v) for v in base])
    return Hyperplane.from_normal(H.normal, H.offset + float(np.dot(H.normal, b)))


def membership(pred: StationaryPrediction, x, tol: float = 1e-9) -> bool:
    """Scale-relative test ``|g(x-b)| <= tol * |g| * max(1, |x-b|)^deg g`` for every generator.

    ``tol = 0`` with rational coordinates evaluates exactly.
    """
    if len(x) != pred.dimension:
        raise ValueError(f"point has {len(x)} coordinates, expected {pred.dimension}")
    if tol < 0:
        raise ValueError("tol must be non-negative")
    base = pred.basepoint or (0,) * pred.dimension
    if tol == 0 and all(isinstance(v, (int, Fraction, str)) for v in x):
        z = [to_fraction(v) - to_fraction(b) for v, b in zip(x, base)]
        return all(g(z) == 0 for g in pred.generators)
    z = np.asarray(x, float) - np.array([float(b) for b in base])
    return bool(np.all(_scaled_residuals(pred.generators, z[None, :]) <= tol))


def _scaled_residuals(gens: Sequence[Polynomial], Z: np.ndarray) -> np.ndarray:
    """Per point, max over generators of ``|g(z)| / (|g| max(1,|z|)^deg g)``."""
    rad = np.maximum(1.0, np.linalg.norm(Z, axis=1))
    worst = np.zeros(Z.shape[0])
    for g in gens:
        val = np.abs(g.evaluate_many(Z)) / (g.max_abs_coefficient() * rad ** max(g.degree, 0))
        worst = np.maximum(worst, val)
    return worst


def _grid_axes(box, resolution: int, exact: bool):
    lo, hi = box
    axes = []
    for a, b in zip(lo, hi):
        if exact:
            a, b = to_fraction(a), to_fraction(b)
            axes.append([a + (b - a) * Fraction(k, resolution - 1) for k in range(resolution)])
        else:
            axes.append(list(np.linspace(float(a), float(b), resolution)))
    return axes


def sample_zero_grid(polys: Sequence[Polynomial], box, resolution: int, tol: float) -> list[tuple]:
    """Grid points (row-major order) where every polynomial vanishes to scale-relative ``tol``.

    ``tol = 0`` switches to an exact rational grid and exact evaluation.
    """
    if not polys:
        raise ValueError("need at least one polynomial")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    exact = tol == 0
    axes = _grid_axes(box, resolution, exact)
    pts = np.array(list(product(*[[float(v) for v in ax] for ax in axes])), float)
    resid = _scaled_residuals(polys, pts)
    if not exact:
        return [tuple(float(v) for v in p) for p, r in zip(pts, resid) if r <= tol]
    out = []
    grid = list(product(*axes))
    for p, r in zip(grid, resid):
        # float prefilter, exact confirmation
        if r <= 1e-9 and all(g(list(p)) == 0 for g in polys):
            out.append(tuple(p))
    return out


# -- zero-set sampling by Newton projection ----------------------------------------


class _Projector:
    """Batched minimum-norm Newton iteration onto the common zeros of the generators."""

    def __init__(self, gens: Sequence[Polynomial]):
        self.gens = [g for g in gens if not g.is_zero()]
        self.scales = [g.max_abs_coefficient() for g in self.gens]
        self.grads = [[g.diff(i) for i in range(g.dimension)] for g in self.gens]

    def residual(self, Z: np.ndarray) -> np.ndarray:
        return np.stack([g.evaluate_many(Z) / s for g, s in zip(self.gens, self.scales)], axis=1)

    def jacobian(self, Z: np.ndarray) -> np.ndarray:
        return np.stack(
            [np.stack([d.evaluate_many(Z) / s for d in grad], axis=1) for grad, s in zip(self.grads, self.scales)],
            axis=1,
        )

    def project(self, Z: np.ndarray, iters: int = 80, max_step: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
        Z = np.array(Z, float)
        for _ in range(iters):
            r = self.residual(Z)
            J = self.jacobian(Z)
            step = -np.einsum("kij,kj->ki", np.linalg.pinv(J, rcond=1e-12), r)
            nrm = np.linalg.norm(step, axis=1, keepdims=True)
            step = np.where(nrm > max_step, step * (max_step / np.maximum(nrm, 1e-300)), step)
            Z = Z + step
            if float(np.max(nrm)) < 1e-15:
                break
        return Z, _scaled_residuals(self.gens, Z)


def extract_hyperplanes(P: Polynomial, basepoint=None, candidates: Iterable[Hyperplane] = (), seed: int = 0, samples: int = 96) -> list[Hyperplane]:
    """Hyperplanes whose linear form divides ``P`` (``P`` in coordinates about ``basepoint``).

    Candidates come from normals at sampled regular zeros of ``P`` (gradient,
    or the dominant Hessian direction where the gradient vanishes), rounded to
    small rationals when they are within 1e-9, plus the supplied
    ``candidates`` (given in the same local coordinates).  Rational candidates
    are tested by exact division, the others by division residual below
    1e-10.  Heuristic: a factor may be missed, but every returned plane divides.
    """
    if P.is_zero():
        raise ValueError("P must be nonzero")
    n = P.dimension
    found: list[Hyperplane] = []
    cands = list(candidates)
    if P.degree >= 1:
        cands.extend(_gradient_candidates(P, seed, samples))
    for H in dedupe_hyperplanes(cands):
        if hyperplane_divides(H, P):
            found.append(H)
    found = dedupe_hyperplanes(found)
    if basepoint is not None:
        found = [to_global(H, basepoint) for H in found]
    return found


def _gradient_candidates(P: Polynomial, seed: int, samples: int) -> list[Hyperplane]:
    n = P.dimension
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0FFEE, n, P.degree]))
    starts = rng.uniform(-1.0, 1.0, (samples, n))
    proj = _Projector([P])
    Z, res = proj.project(starts)
    ok = (res < 1e-11) & np.all(np.isfinite(Z), axis=1)
    Z = Z[ok]
    if Z.shape[0] == 0:
        return []
    grads = np.stack([P.diff(i).evaluate_many(Z) for i in range(n)], axis=1)
    hess = [[P.diff(i).diff(j) for j in range(n)] for i in range(n)]
    cands = []
    scale = P.max_abs_coefficient()
    for z, g in zip(Z, grads):
        if np.linalg.norm(g) > 1e-7 * scale * max(1.0, np.linalg.norm(z)) ** max(P.degree - 1, 0):
            normal = g
        else:
            Hm = np.array([[hess[i][j].evaluate_many(z[None, :])[0] for j in range(n)] for i in range(n)])
            w, v = np.linalg.eigh(Hm)
            if np.max(np.abs(w)) < 1e-9 * scale:
                continue
            normal = v[:, np.argmax(np.abs(w))]
        normal = normal / np.linalg.norm(normal)
        offset = float(normal @ z)
        cands.append(_rationalize(normal, offset))
    return cands


def _rationalize(normal: np.ndarray, offset: float, max_den: int = 64) -> Hyperplane:
    k = int(np.argmax(np.abs(normal)))
    ratio = normal / normal[k]
    c = offset / normal[k]
    fr = [Fraction(float(v)).limit_denominator(max_den) for v in ratio]
    fc = Fraction(c).limit_denominator(max_den)
    if all(abs(float(a) - v) < 1e-9 for a, v in zip(fr, ratio)) and abs(float(fc) - c) < 1e-9:
        return Hyperplane.from_form(fr, fc)
    return Hyperplane.from_normal(normal, offset)


def sample_predicted_set(pred: StationaryPrediction, box, count: int, rng: np.random.Generator, tol: float = 1e-11) -> np.ndarray:
    """Up to ``count`` distinct points of the predicted set inside ``box`` (global coordinates).

    Half come from the listed hyperplanes (if any); the rest from Newton
    projection of random starts onto the common zeros of the generators.
    """
    n = pred.dimension
    if pred.is_empty() or count <= 0:
        return np.zeros((0, n))
    lo, hi = (np.asarray(b, float) for b in box)
    base = pred.basepoint_array() if pred.basepoint else np.zeros(n)
    out: list[np.ndarray] = []
    n_planes = count // 2 if pred.hyperplanes else 0
    for k in range(n_planes):
        H = pred.hyperplanes[k % len(pred.hyperplanes)]
        for _ in range(50):
            p = H.project(lo + (hi - lo) * rng.random(n))
            if np.all(p >= lo) and np.all(p <= hi):
                out.append(p)
                break
    proj = _Projector(pred.generators)
    attempts = 0
    while len(out) < count and attempts < 8:
        attempts += 1
        need = count - len(out)
        before = len(out)
        starts = lo + (hi - lo) * rng.random((min(max(4 * need, 32), 4096), n))
        Z, res = proj.project(starts - base)
        Z = Z + base
        good = (res <= tol) & np.all(Z >= lo, axis=1) & np.all(Z <= hi, axis=1)
        out.extend(Z[good])
        out = list(_distinct(np.array(out).reshape(-1, n)))
        if len(out) - before < max(1, need // 100):
            break  # the set is (nearly) finite here; more starts find the same points
    return np.array(out[:count]).reshape(-1, n)


def _distinct(P: np.ndarray, spacing: float = 1e-6) -> np.ndarray:
    """First occurrence of each point up to ``spacing`` (grid bucketing), order preserved."""
    if P.shape[0] == 0:
        return P
    _, first = np.unique(np.round(P / spacing).astype(np.int64), axis=0, return_index=True)
    return P[np.sort(first)]


class DistanceEstimator:
    """Estimated distance to the predicted set.

    Minimum of the exact distance to listed hyperplanes, the distance to a
    dense sample of the set (box padded by a tenth of its size), and the
    distance to the point's own Newton projection.  Accurate to about the
    sample spacing; the sample is drawn once.
    """

    def __init__(self, pred: StationaryPrediction, box, rng: np.random.Generator, cloud_size: int | None = None):
        self.pred = pred
        n = pred.dimension
        lo, hi = (np.asarray(b, float) for b in box)
        pad = 0.1 * float(np.max(hi - lo))
        size = cloud_size or (3000 if n == 2 else 12000)
        self.base = pred.basepoint_array() if pred.basepoint else np.zeros(n)
        self.tree = None
        if not pred.is_empty():
            cloud = sample_predicted_set(pred, (lo - pad, hi + pad), size, rng)
            if cloud.shape[0]:
                self.tree = cKDTree(cloud)
        self.projector = _Projector(pred.generators)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        dist = np.full(pts.shape[0], np.inf)
        if self.pred.is_empty():
            return dist
        for H in self.pred.hyperplanes:
            dist = np.minimum(dist, np.abs(H.signed_distance(pts)))
        if self.tree is not None:
            d, _ = self.tree.query(pts)
            dist = np.minimum(dist, d)
        Z, res = self.projector.project(pts - self.base)
        hit = res <= 1e-11
        dist[hit] = np.minimum(dist[hit], np.linalg.norm(Z[hit] + self.base - pts[hit], axis=1))
        return dist


def estimate_distance(pred: StationaryPrediction, points, box, rng: np.random.Generator) -> np.ndarray:
    return DistanceEstimator(pred, box, rng)(points)


def far_points(pred: StationaryPrediction, box, count: int, min_dist: float, rng: np.random.Generator) -> np.ndarray:
    """Random points in ``box`` at estimated distance at least ``min_dist`` from the predicted set."""
    lo, hi = (np.asarray(b, float) for b in box)
    n = lo.shape[0]
    dist = DistanceEstimator(pred, box, rng)
    out: list[np.ndarray] = []
    for _ in range(20):
        cand = lo + (hi - lo) * rng.random((max(4 * count, 64), n))
        out.extend(cand[dist(cand) >= min_dist])
        if len(out) >= count:
            break
    return np.array(out[:count]).reshape(-1, n)


# -- multi-source predictions -----------------------------------------------------


def _translate(P: Polynomial, y) -> Polynomial:
    """``z -> P(z + y)``."""
    n = P.dimension
    shift = OrthogonalAffineMap.identity(n)
    shift = OrthogonalAffineMap(shift.matrix, [to_fraction(v) for v in y], check=False)
    return compose_affine(P, shift)


def cone_contained(f: FiniteDistribution, Psi: Polynomial) -> bool:
    """Sufficient test that ``N(Psi)`` (global coordinates) lies in the stationary set of ``f``.

    Holds when, at every source, ``Psi`` moved to the source divides each
    single-point generator of that source's weight.
    """
    for point, weight in f.sources:
        local = _translate(Psi, point)
        if any(divides(local, g) is None for g in single_point_generators(weight)):
            return False
    return True


def _span_candidates(f: FiniteDistribution, extra: Iterable[Hyperplane]) -> list[Hyperplane]:
    """Hyperplanes containing the whole support (all points self-mirror)."""
    n = f.dimension
    out = []
    pts = f.points
    span = span_support(f)
    if span.dim == n - 1:
        idx = [0]
        arr = f.points_array()
        for k in range(1, len(pts)):
            trial = idx + [k]
            if np.linalg.matrix_rank(arr[trial] - arr[trial[0]]) == len(trial) - 1:
                idx = trial
            if len(idx) == n:
                break
        H = hyperplane_through_points([pts[i] for i in idx])
        if H is not None:
            out.append(H)
    for point, weight in f.sources:
        if weight.degree >= 1:
            out.extend(extract_hyperplanes(weight, point))
    out.extend(extra)
    return [H for H in dedupe_hyperplanes(out) if all(H.contains(p) for p in pts)]


def predict_distribution(f: FiniteDistribution, candidate_cones: Iterable[Polynomial] = (), candidate_hyperplanes: Iterable[Hyperplane] = ()) -> StationaryPrediction:
    """Prediction for a general finitely supported source.

    One source: the single-point prediction (exact).  Several sources: the
    union of odd mirrors (bisectors and support-containing planes about which
    ``f`` is odd) and of candidate cones passing :func:`cone_contained`.  The
    result is flagged containment-only.
    """
    if len(f.sources) == 1:
        point, weight = f.sources[0]
        return predict_single_point(weight, point, candidate_hyperplanes)
    n = f.dimension
    extra = list(candidate_hyperplanes)
    cands = candidate_mirrors(f, _span_candidates(f, extra))
    mirrors = [H for H in cands if is_odd(f, H)]
    notes = [f"{len(cands)} candidate mirrors, {len(mirrors)} with odd data"]
    if len(mirrors) >= 2:
        clo = closure(mirrors)
        if clo.closed:
            extra_m = [H for H in clo.hyperplanes if is_odd(f, H)]
            mirrors = dedupe_hyperplanes(mirrors + extra_m)
            notes.append(f"reflection closure: {len(clo.hyperplanes)} planes, group order {clo.group_order}")
        else:
            notes.append("reflection closure exceeded its bound")
    cones = [Psi for Psi in candidate_cones if cone_contained(f, Psi)]
    gen = Polynomial.constant(n, 1)
    for H in mirrors:
        gen = gen * H.linear_form()
    for Psi in cones:
        gen = gen * Psi
    if gen.degree == 0:
        notes.append("no mirror or cone certified; predicted subset is empty")
    notes.append("containment only: the stationary set contains the predicted set")
    base = (Fraction(0),) * n
    return StationaryPrediction((gen,), tuple(mirrors), span_support(f), base, True, tuple(notes))
