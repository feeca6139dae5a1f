"""Numeric ground truth: mollified sources, spherical means, stationarity indicators.

Everything here works in floats.  Exact polynomial weights are converted at
the boundary; the only symbolic input the oracle uses is the weight itself,
never a prediction.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .coxeter import FiniteDistribution
from .polyalg import Polynomial, homogeneous_components, iterated_laplacians

BUMP_MAX_ORDER = 8
# Gaussian tails beyond this many widths are below 1e-17 of the peak.
_GAUSS_CUT = 9.0


class NumericValidityError(RuntimeError):
    """Raised when a quadrature fails its own convergence check."""


# -- mollifiers -----------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    sigma: float
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    kind = "gaussian"

    @property
    def width(self) -> float:
        return self.sigma

    @property
    def feature_scale(self) -> float:
        """Smallest length scale of the profile, used to size angular quadratures."""
        return self.sigma

    def support_radius(self, order: int = 0) -> float:
        return (_GAUSS_CUT + 0.5 * order) * self.sigma

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, float)
        r2 = np.sum(z * z, axis=-1)
        return (2 * math.pi * self.sigma**2) ** (-self.n / 2) * np.exp(-r2 / (2 * self.sigma**2))

    def to_json(self) -> dict:
        return {"kind": "gaussian", "sigma": self.sigma}


@dataclass(frozen=True)
class Bump:
    """``c exp(-1/(1 - |x/eps|^2))`` inside the ball of radius ``eps``, normalised to unit mass.

    ``derivatives`` selects how ``G(-∂)`` is applied: ``"exact"`` uses the
    closed form for derivatives of a radial profile, ``"fd"`` tensor
    finite differences (kept as an independent cross-check).
    """

    epsilon: float
    n: int
    derivatives: str = "exact"
    constant: float = field(init=False, repr=False)

    kind = "bump"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.derivatives not in ("exact", "fd"):
            raise ValueError(f"derivatives must be 'exact' or 'fd', got {self.derivatives!r}")
        object.__setattr__(self, "constant", 1.0 / (self.epsilon**self.n * _unit_bump_mass(self.n)))

    @classmethod
    def matching(cls, sigma: float, n: int, derivatives: str = "exact") -> "Bump":
        """Bump whose per-axis standard deviation equals that of ``Gaussian(sigma)``."""
        return cls(sigma / _unit_bump_axis_std(n), n, derivatives)

    @property
    def width(self) -> float:
        """Per-axis standard deviation, comparable with a Gaussian's ``sigma``."""
        return self.epsilon * _unit_bump_axis_std(self.n)

    @property
    def feature_scale(self) -> float:
        # the profile steepens sharply in the outer quarter of the ball
        return self.epsilon / 4

    def support_radius(self, order: int = 0) -> float:
        if self.derivatives == "exact":
            return self.epsilon
        h = _bump_step(order) * self.epsilon
        return self.epsilon + 6 * h * math.sqrt(self.n)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, float)
        s = 1.0 - np.sum(z * z, axis=-1) / self.epsilon**2
        out = np.zeros_like(s)
        inside = s > 0
        out[inside] = self.constant * np.exp(-1.0 / s[inside])
        return out

    def to_json(self) -> dict:
        return {"kind": "bump", "epsilon": self.epsilon, "derivatives": self.derivatives}


RadialMollifier = Gaussian | Bump


def _sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@lru_cache(maxsize=None)
def _unit_bump_mass(n: int) -> float:
    val, _ = integrate.quad(
        lambda s: math.exp(-1.0 / (1.0 - s * s)) * s ** (n - 1), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200
    )
    return _sphere_area(n) * val


@lru_cache(maxsize=None)
def _unit_bump_axis_std(n: int) -> float:
    second, _ = integrate.quad(
        lambda s: math.exp(-1.0 / (1.0 - s * s)) * s ** (n + 1), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200
    )
    # E|x|^2 / n for the unit bump
    return math.sqrt(_sphere_area(n) * second / _unit_bump_mass(n) / n)


def mollifier_from_json(data: dict, n: int) -> RadialMollifier:
    kind = data.get("kind")
    if kind == "gaussian" and set(data) == {"kind", "sigma"}:
        return Gaussian(float(data["sigma"]), n)
    if kind == "bump" and {"kind", "epsilon"} <= set(data) <= {"kind", "epsilon", "derivatives"}:
        return Bump(float(data["epsilon"]), n, data.get("derivatives", "exact"))
    raise ValueError(f"bad mollifier specification {data!r}")


# -- derivative stencils for the bump --------------------------------------------


def _bump_step(order: int) -> float:
    """Finite-difference step as a fraction of epsilon, by total derivative order."""
    return 1e-3 if order <= 6 else 3e-3


def fornberg_weights(m: int, offsets: Sequence[float]) -> np.ndarray:
    """Weights of the ``m``-th derivative at 0 on the given stencil offsets (Fornberg 1988)."""
    z = np.asarray(offsets, float)
    N = len(z)
    c = np.zeros((N, m + 1))
    c1, c4 = 1.0, z[0]
    c[0, 0] = 1.0
    for i in range(1, N):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, z[i]
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=None)
def _central_stencil(m: int) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Sixth-order central stencil for the ``m``-th derivative on integer offsets."""
    if m == 0:
        return (0,), (1.0,)
    p = (m + 1) // 2 + 2
    offs = tuple(range(-p, p + 1))
    return offs, tuple(fornberg_weights(m, offs))


@lru_cache(maxsize=256)
def _merged_stencil(weight: Polynomial, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice offsets and weights applying ``weight(-∂)`` by tensor finite differences."""
    order = weight.degree
    if order > BUMP_MAX_ORDER:
        raise ValueError(f"derivative order {order} exceeds {BUMP_MAX_ORDER} on the bump path")
    h = _bump_step(order) * epsilon
    acc: dict[tuple[int, ...], float] = {}
    for exps, c in weight.terms.items():
        coeff = float(c) * (-1.0) ** sum(exps)
        grids = [_central_stencil(a) for a in exps]
        scale = coeff / h ** sum(exps)
        for combo in np.ndindex(*(len(g[0]) for g in grids)):
            off = tuple(g[0][k] for g, k in zip(grids, combo))
            w = scale * math.prod(g[1][k] for g, k in zip(grids, combo))
            acc[off] = acc.get(off, 0.0) + w
    keys = sorted(acc)
    return np.array(keys, float) * h, np.array([acc[k] for k in keys])


# -- Hermite closed forms for the Gaussian ----------------------------------------


def _hermite_table(s: np.ndarray, kmax: int) -> np.ndarray:
    """Probabilists' Hermite ``He_0..He_kmax`` at ``s``; shape ``(kmax + 1, *s.shape)``."""
    H = np.empty((kmax + 1, *s.shape))
    H[0] = 1.0
    if kmax >= 1:
        H[1] = s
    for k in range(1, kmax):
        H[k + 1] = s * H[k] - k * H[k - 1]
    return H


def _gaussian_weighted(weight: Polynomial, phi: Gaussian, D: np.ndarray) -> np.ndarray:
    """``(weight(-∂) phi)(D)`` for offsets ``D`` of shape ``(m, n)``.

    ``∂^k e^{-s^2/2} = (-1)^k He_k(s) e^{-s^2/2}`` in ``s = z / sigma``, so the sign
    from ``-∂`` cancels: ``(-∂)^a phi = sigma^{-|a|} prod_i He_{a_i}(s_i) phi``.
    """
    sig = phi.sigma
    S = D / sig
    kmax = max(max(e) for e in weight.terms)
    H = [_hermite_table(S[:, i], kmax) for i in range(phi.n)]
    poly = np.zeros(D.shape[0])
    for exps, c in weight.terms.items():
        term = np.full(D.shape[0], float(c) * sig ** (-sum(exps)))
        for i, a in enumerate(exps):
            if a:
                term = term * H[i][a]
        poly += term
    return poly * phi(D)


@lru_cache(maxsize=None)
def _exp_inverse_derivative(k: int) -> tuple[int, ...]:
    """Coefficients (ascending) of ``p_k`` with ``d^k/du^k e^{-1/u} = e^{-1/u} p_k(1/u)``."""
    if k == 0:
        return (1,)
    prev = np.polynomial.Polynomial(_exp_inverse_derivative(k - 1))
    nxt = np.polynomial.Polynomial([0, 0, 1]) * (prev - prev.deriv())
    return tuple(int(round(c)) for c in nxt.coef)


@lru_cache(maxsize=256)
def _radial_derivative_terms(weight: Polynomial) -> tuple[tuple[Polynomial, int, float], ...]:
    """Terms ``(Q, k, c)`` with ``weight(-∂) F(|z|^2/2) = sum c Q(z) F^{(k)}(|z|^2/2)``.

    Per homogeneous part ``G_m``: ``G_m(∂) F(|z|^2/2) = sum_j Δ^j G_m(z) F^{(m-j)} / (2^j j!)``,
    and ``-∂`` contributes ``(-1)^m``.
    """
    terms = []
    for m, part in homogeneous_components(weight):
        for j, lap in enumerate(iterated_laplacians(part)):
            if not lap.is_zero():
                terms.append((lap, m - j, (-1.0) ** m / (2**j * math.factorial(j))))
    return tuple(terms)


def _bump_weighted(weight: Polynomial, phi: Bump, D: np.ndarray) -> np.ndarray:
    if weight.degree > BUMP_MAX_ORDER:
        raise ValueError(f"derivative order {weight.degree} exceeds {BUMP_MAX_ORDER} on the bump path")
    if phi.derivatives == "fd":
        offsets, w = _merged_stencil(weight, phi.epsilon)
        out = np.zeros(D.shape[0])
        for off, wk in zip(offsets, w):
            out += wk * phi(D + off)
        return out
    # F(rho) = c h(u) with u = 1 - 2 rho / eps^2, so F^{(k)} = c (-2/eps^2)^k h^{(k)}(u)
    eps2 = phi.epsilon**2
    u = 1.0 - np.einsum("ij,ij->i", D, D) / eps2
    live = u > 1.0 / 700.0
    out = np.zeros(D.shape[0])
    if not np.any(live):
        return out
    Dl = D[live]
    s = 1.0 / u[live]
    base = phi.constant * np.exp(-s)
    acc = np.zeros(Dl.shape[0])
    for Q, k, c in _radial_derivative_terms(weight):
        pk = np.polynomial.polynomial.polyval(s, _exp_inverse_derivative(k))
        acc += c * (-2.0 / eps2) ** k * Q.evaluate_many(Dl) * pk
    out[live] = acc * base
    return out


def _source_field(weight: Polynomial, phi: RadialMollifier, D: np.ndarray) -> np.ndarray:
    """``(weight(-∂) phi)(D)`` for offsets ``D`` from the source."""
    if isinstance(phi, Gaussian):
        return _gaussian_weighted(weight, phi, D)
    return _bump_weighted(weight, phi, D)


def mollified_values(f: FiniteDistribution, phi: RadialMollifier, Z) -> np.ndarray:
    """``(f * phi)(z)`` at every row of ``Z``: ``sum_i (G_i(-∂) phi)(z - y_i)``."""
    Z = np.asarray(Z, float)
    flat = Z.reshape(-1, f.dimension)
    out = np.zeros(flat.shape[0])
    for point, weight in f.sources:
        y = np.array([float(v) for v in point])
        D = flat - y
        reach = phi.support_radius(weight.degree)
        near = np.einsum("ij,ij->i", D, D) < reach * reach
        if not np.any(near):
            continue
        out[near] += _source_field(weight, phi, D[near])
    return out.reshape(Z.shape[:-1])


def mollified_eval(f: FiniteDistribution, phi: RadialMollifier, z) -> float:
    return float(mollified_values(f, phi, np.asarray(z, float)[None, :])[0])


# -- spherical means ---------------------------------------------------------------


@lru_cache(maxsize=256)
def _circle_nodes(N: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(N) / N
    return np.stack([np.cos(t), np.sin(t)], axis=1)


@lru_cache(maxsize=256)
def _sphere_rings(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre rings in ``cos(polar)`` (``N // 2`` of them) and ``N`` azimuths each."""
    u, wu = np.polynomial.legendre.leggauss(max(2, N // 2))
    u = 0.5 * (u - u[::-1])
    wu = 0.5 * (wu + wu[::-1])
    t = 2 * np.pi * np.arange(N) / N
    return u, wu / 2.0, np.stack([np.cos(t), np.sin(t)], axis=1)


def spherical_mean(g: Callable[[np.ndarray], np.ndarray], x, r: float, quad_order: int = 64) -> float:
    """Mean of ``g`` over the sphere of radius ``r`` about ``x`` (normalised surface measure).

    ``g`` maps an ``(m, n)`` array of points to ``m`` values.  In the plane the
    rule is the ``quad_order``-point trapezoid; in space it is Gauss-Legendre in
    the polar cosine times a ``quad_order``-point trapezoid in azimuth.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    return float(spherical_means(g, x, np.array([float(r)]), quad_order)[0])


def spherical_means(g, x, radii, quad_order, centers: np.ndarray | None = None, reach: float = np.inf) -> np.ndarray:
    """Spherical means at several radii.

    ``quad_order`` is one node count or one per radius.  When ``centers`` and
    ``reach`` are given, ``g`` is taken to vanish outside the union of balls
    ``B(center, reach)`` and nodes there are skipped.
    """
    x = np.asarray(x, float)
    n = x.shape[0]
    radii = np.asarray(radii, float)
    orders = np.broadcast_to(np.asarray(quad_order, int), radii.shape)
    out = np.zeros(len(radii))
    if n == 2:
        for k, (r, N) in enumerate(zip(radii, orders)):
            dirs = _circle_nodes(int(N))
            pts = x + r * dirs
            if centers is not None:
                keep = _near_any(pts, centers, reach)
                if not keep.any():
                    continue
                out[k] = float(np.sum(g(pts[keep]))) / len(dirs)
            else:
                out[k] = float(np.mean(g(pts)))
        return out
    if n == 3:
        for k, (r, N) in enumerate(zip(radii, orders)):
            u, wu, az = _sphere_rings(int(N))
            s = np.sqrt(1.0 - u * u)
            rings = np.arange(len(u))
            if centers is not None:
                rings = rings[_rings_near(x, r, u, s, centers, reach)]
                if rings.size == 0:
                    continue
            pts = np.empty((rings.size, az.shape[0], 3))
            pts[..., 0] = x[0] + r * s[rings, None] * az[None, :, 0]
            pts[..., 1] = x[1] + r * s[rings, None] * az[None, :, 1]
            pts[..., 2] = x[2] + r * u[rings, None]
            flat = pts.reshape(-1, 3)
            vals = np.zeros(flat.shape[0])
            if centers is not None:
                keep = _near_any(flat, centers, reach)
                if keep.any():
                    vals[keep] = g(flat[keep])
            else:
                vals = g(flat)
            ring_means = vals.reshape(rings.size, az.shape[0]).mean(axis=1)
            out[k] = float(np.sum(wu[rings] * ring_means))
        return out
    raise ValueError(f"numeric spherical means are implemented for n = 2, 3 only (got {n})")


def _orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows ``e1, e2, e3`` with ``e3 = axis`` (unit)."""
    k = int(np.argmin(np.abs(axis)))
    helper = np.zeros(3)
    helper[k] = 1.0
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(axis, e1), axis])


def cap_spherical_means(f: FiniteDistribution, phi: RadialMollifier, x, radii, polar_nodes: int) -> np.ndarray:
    """Spherical means of ``f * phi`` in space, integrating each source over its own cap.

    With the polar axis pointing from ``x`` to the source, ``|z - y|^2 =
    r^2 + d^2 - 2 r d v`` depends only on ``v = cos(polar)``.  The mollifier
    factor is integrated by Gauss-Legendre over the cap ``v >= v0`` where the
    source's field is supported (cut off for the Gaussian), and the
    polynomial factor, a trigonometric polynomial in azimuth, by a short
    trapezoid that is exact for it.
    """
    x = np.asarray(x, float)
    radii = np.asarray(radii, float)
    out = np.zeros(len(radii))
    gl_u, gl_w = _legendre(int(polar_nodes))
    for point, weight in f.sources:
        y = np.array([float(v) for v in point])
        reach = phi.support_radius(weight.degree)
        K = 2 * weight.degree + 8
        if isinstance(phi, Bump) and phi.derivatives == "fd":
            K = max(K, 24)
        ring = _circle_nodes(K)
        offset = x - y
        d = float(np.linalg.norm(offset))
        frame = _orthonormal_frame(-offset / d if d > 1e-12 else np.array([0.0, 0.0, 1.0]))
        act = np.flatnonzero(np.abs(radii - d) < reach)
        if act.size == 0:
            continue
        r = radii[act]
        if d <= 1e-12:
            v0 = np.full(r.shape, -1.0)
        else:
            v0 = np.maximum(-1.0, (r * r + d * d - reach * reach) / (2 * r * d))
        half = 0.5 * (1 - v0)
        v = half[:, None] * gl_u[None, :] + (1 - half)[:, None]
        wv = half[:, None] * gl_w[None, :]
        rs = r[:, None] * np.sqrt(np.maximum(0.0, 1 - v * v))
        local = np.empty((r.size, v.shape[1], K, 3))
        local[..., 0] = rs[..., None] * ring[None, None, :, 0]
        local[..., 1] = rs[..., None] * ring[None, None, :, 1]
        local[..., 2] = (r[:, None] * v)[..., None]
        D = offset + local.reshape(-1, 3) @ frame
        vals = _source_field(weight, phi, D).reshape(r.size, v.shape[1], K)
        out[act] += 0.5 * np.einsum("ij,ij->i", wv, vals.mean(axis=2))
    return out


@lru_cache(maxsize=64)
def _legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(m)


def _near_any(pts: np.ndarray, centers: np.ndarray, reach: float) -> np.ndarray:
    keep = np.zeros(pts.shape[0], bool)
    for c in centers:
        d = pts - c
        keep |= np.einsum("ij,ij->i", d, d) < reach * reach
    return keep


def _rings_near(x, r, u, s, centers, reach) -> np.ndarray:
    keep = np.zeros(u.shape[0], bool)
    for c in centers:
        dz = c[2] - (x[2] + r * u)
        dxy = math.hypot(c[0] - x[0], c[1] - x[1])
        d2 = dz * dz + (dxy - r * s) ** 2
        keep |= d2 < reach * reach
    return keep


# -- oracle configuration -----------------------------------------------------------


@dataclass(frozen=True)
class OracleConfig:
    mollifier: RadialMollifier
    quad_order: int = 64
    r_grid: tuple[float, float, int] = (0.05, 1.0, 96)
    tau: float = 1e-6
    box: tuple[tuple[float, ...], tuple[float, ...]] = ((-1.0, -1.0), (1.0, 1.0))
    reference_scale: float | None = None
    seed: int = 0
    probes: int = 32

    def __post_init__(self):
        r_min, r_max, count = self.r_grid
        if not (r_max > r_min > 0) or count < 8:
            raise ValueError(f"invalid radius grid {self.r_grid}")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.quad_order < 4:
            raise ValueError("quad_order too small")

    @classmethod
    def default(cls, f: FiniteDistribution, mollifier: RadialMollifier | str | None = None, **overrides) -> "OracleConfig":
        """Scale-aware defaults: width 0.1 x diameter (0.1 for one point), box of half-width diam/2 + 10 widths."""
        n = f.dimension
        diam = f.diameter()
        sigma = 0.1 * diam if diam > 0 else 0.1
        if mollifier is None or mollifier == "gaussian":
            mollifier = Gaussian(sigma, n)
        elif mollifier == "bump":
            mollifier = Bump.matching(sigma, n)
        pts = f.points_array()
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        center = (lo + hi) / 2
        half = float(np.max(hi - lo)) / 2 + 10 * sigma
        box = (tuple(float(v) for v in center - half), tuple(float(v) for v in center + half))
        kwargs = dict(mollifier=mollifier, r_grid=(sigma / 2, diam + 6 * sigma, 96), box=box)
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def dimension(self) -> int:
        return len(self.box[0])

    def radii(self, r_max: float | None = None) -> np.ndarray:
        r_min, base_max, count = self.r_grid
        top = base_max if r_max is None else max(base_max, r_max)
        return np.geomspace(r_min, top, int(count))

    def to_json(self) -> dict:
        return {
            "mollifier": self.mollifier.to_json(),
            "quad_order": self.quad_order,
            "r_grid": {"r_min": self.r_grid[0], "r_max": self.r_grid[1], "count": self.r_grid[2]},
            "tau": self.tau,
            "box": {"lo": list(self.box[0]), "hi": list(self.box[1])},
            "reference_scale": self.reference_scale,
            "seed": self.seed,
        }


def max_threads() -> int:
    env = os.environ.get("NODALCONE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _uses_caps(phi: RadialMollifier, n: int) -> bool:
    return n == 3


def _cap_nodes(phi: RadialMollifier, quad_order: int, order: int) -> int:
    """Polar Gauss-Legendre nodes per cap.

    The Gaussian factor is an exponential in ``v``; the bump profile in ``v``
    does not depend on the radius but steepens with the derivative order.
    """
    if isinstance(phi, Gaussian):
        return quad_order
    return quad_order * (2 + order)


def _node_count(cfg: OracleConfig, radii: np.ndarray, d_max: float, order: int) -> np.ndarray:
    """Angular nodes per radius, always a multiple of 24.

    Gaussian: the integrand along a circle behaves like ``exp(kappa cos t)``
    with ``kappa = r d / sigma^2``, whose Fourier modes fall off like
    ``exp(-m^2 / 2 kappa)``; ``quad_order`` nodes serve ``kappa <= 64`` and
    the count grows with ``sqrt(kappa)`` at the largest radius.  Bump: the
    trapezoid error decays only like ``exp(-c sqrt(N))``, so the count is
    proportional to the number of bump diameters around the circle, times
    ``1 + order``.
    """
    radii = np.asarray(radii, float)
    phi = cfg.mollifier
    if isinstance(phi, Gaussian):
        w = phi.feature_scale
        kappa = float(radii[-1]) * max(d_max, w) / (w * w)
        need = cfg.quad_order * max(1.0, (math.sqrt(kappa) + order) / 8.0)
        return np.full(radii.shape, int(24 * math.ceil(need / 24)))
    need = cfg.quad_order * np.maximum(1.0, 6.0 * radii / phi.epsilon * (1 + order))
    return (24 * np.ceil(need / 24)).astype(int)


@dataclass(frozen=True)
class IndicatorProfile:
    location: tuple[float, ...]
    radii: np.ndarray
    means: np.ndarray
    nodes: int  # largest per-radius node count
    widened: bool

    @property
    def indicator(self) -> float:
        return float(np.max(np.abs(self.means))) if self.means.size else 0.0


def indicator_profile(f: FiniteDistribution, cfg: OracleConfig, x, quad_order: int | None = None) -> IndicatorProfile:
    """Spherical means of ``f * phi`` about ``x`` over the (possibly widened) radius grid."""
    if quad_order is not None:
        cfg = replace(cfg, quad_order=quad_order)
    x = np.asarray(x, float)
    pts = f.points_array()
    d = np.linalg.norm(pts - x, axis=1)
    phi = cfg.mollifier
    needed = float(d.max()) + max(3 * phi.width, phi.support_radius())
    widened = needed > cfg.r_grid[1]
    radii = cfg.radii(needed)
    order = f.max_weight_degree()
    reach = max(phi.support_radius(w.degree) for _, w in f.sources)
    N = _node_count(cfg, radii, float(d.max()), order)
    active = np.zeros(len(radii), bool)
    for di in d:
        active |= np.abs(radii - di) < reach
    means = np.zeros(len(radii))
    if _uses_caps(phi, x.shape[0]):
        N = np.full(len(radii), _cap_nodes(phi, cfg.quad_order, order))
        if active.any():
            means[active] = cap_spherical_means(f, phi, x, radii[active], int(N[0]))
    elif active.any():
        field_fn = lambda P: mollified_values(f, phi, P)  # noqa: E731
        means[active] = spherical_means(field_fn, x, radii[active], N[active], centers=pts, reach=reach)
    return IndicatorProfile(tuple(float(v) for v in x), radii, means, int(N.max()), widened)


def stationarity_indicator(f: FiniteDistribution, cfg: OracleConfig, x) -> float:
    """``sup_r |f^(x, r)|`` over the configured radius grid."""
    return indicator_profile(f, cfg, x).indicator


def indicators(f: FiniteDistribution, cfg: OracleConfig, points, quad_order: int | None = None) -> list[IndicatorProfile]:
    """Profiles at many points, in input order, using up to ``NODALCONE_THREADS`` workers."""
    pts = [np.asarray(p, float) for p in points]
    workers = min(max_threads(), max(1, len(pts)))
    if workers == 1:
        return [indicator_profile(f, cfg, p, quad_order) for p in pts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: indicator_profile(f, cfg, p, quad_order), pts))


def random_in_box(box, count: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = (np.asarray(b, float) for b in box)
    return lo + (hi - lo) * rng.random((count, lo.shape[0]))


def calibrate(f: FiniteDistribution, cfg: OracleConfig) -> OracleConfig:
    """Set ``reference_scale`` to the median indicator over seeded random probes in the box."""
    if cfg.reference_scale is not None:
        return cfg
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5EED]))
    probes = random_in_box(cfg.box, cfg.probes, rng)
    vals = [p.indicator for p in indicators(f, cfg, probes)]
    scale = float(np.median(vals))
    if not scale > 0:
        raise NumericValidityError("reference scale vanished; probes never met the source shells")
    return replace(cfg, reference_scale=scale)


# -- wave solutions ---------------------------------------------------------------


def wave_eval(f: FiniteDistribution, phi: RadialMollifier, x, t: float, quad_order: int = 64) -> float:
    """Solution at ``(x, t)`` of ``u_tt = Δu``, ``u(0) = 0``, ``u_t(0) = f * phi``.

    Space (Kirchhoff): ``u = t M(x, t)``.  Plane (Poisson): ``u = (1/2π) ∫_{|y-x|<t}
    g(y) / sqrt(t^2 - |y-x|^2) dy``; with ``|y - x| = t sin(psi)`` this becomes
    ``t ∫_0^{π/2} sin(psi) M(x, t sin psi) dpsi``, which is smooth in ``psi``.
    """
    if not t > 0:
        raise ValueError("time must be positive")
    x = np.asarray(x, float)
    n = x.shape[0]
    cfg = OracleConfig(phi, quad_order=quad_order, box=(tuple([-1.0] * n), tuple([1.0] * n)))
    pts = f.points_array()
    d_max = float(np.linalg.norm(pts - x, axis=1).max())
    reach = max(phi.support_radius(w.degree) for _, w in f.sources)
    N = int(_node_count(cfg, np.array([t]), d_max, f.max_weight_degree())[0])
    field_fn = lambda P: mollified_values(f, phi, P)  # noqa: E731
    if n == 3 and _uses_caps(phi, n):
        return t * float(cap_spherical_means(f, phi, x, np.array([t]), _cap_nodes(phi, quad_order, f.max_weight_degree()))[0])
    if n == 3:
        return t * float(spherical_means(field_fn, x, np.array([t]), N, centers=pts, reach=reach)[0])
    if n == 2:
        m = max(quad_order, int(math.ceil(12 * t / phi.feature_scale)) + 16)
        psi, w = np.polynomial.legendre.leggauss(m)
        psi = (psi + 1) * (math.pi / 4)
        w = w * (math.pi / 4)
        rho = t * np.sin(psi)
        means = spherical_means(field_fn, x, rho, N, centers=pts, reach=reach)
        return t * float(np.sum(w * np.sin(psi) * means))
    raise ValueError(f"wave formulas are implemented for n = 2, 3 only (got {n})")


# -- verification -----------------------------------------------------------------

STATIONARY = "Stationary"
NOT_STATIONARY = "NotStationary"


@dataclass(frozen=True)
class PointRecord:
    location: tuple[float, ...]
    role: str  # "on", "off" or "unclassified"
    indicator: float
    normalized: float
    verdict: str
    widened: bool = False

    @property
    def ok(self) -> bool:
        if self.role == "on":
            return self.verdict == STATIONARY
        if self.role == "off":
            return self.verdict == NOT_STATIONARY
        return True

    def to_json(self) -> dict:
        return {
            "location": list(self.location),
            "role": self.role,
            "indicator": self.indicator,
            "normalized": self.normalized,
            "verdict": self.verdict,
            "widened": self.widened,
        }


@dataclass(frozen=True)
class StationarityReport:
    """Per-point oracle verdicts for a prediction, with the overall PASS/FAIL."""

    records: tuple[PointRecord, ...]
    reference_scale: float
    tau: float
    r_grid: tuple[float, float, int]
    notes: tuple[str, ...] = ()
    sampling_failed: bool = False
    config: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return not self.sampling_failed and all(r.ok for r in self.records)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def by_role(self, role: str) -> list[PointRecord]:
        return [r for r in self.records if r.role == role]

    def to_json(self) -> dict:
        on, off = self.by_role("on"), self.by_role("off")
        return {
            "status": self.status,
            "reference_scale": self.reference_scale,
            "tau": self.tau,
            "r_grid": {"r_min": self.r_grid[0], "r_max": self.r_grid[1], "count": self.r_grid[2]},
            "summary": {
                "on_points": len(on),
                "on_failures": sum(not r.ok for r in on),
                "off_points": len(off),
                "off_failures": sum(not r.ok for r in off),
                "unclassified": len(self.by_role("unclassified")),
                "max_on_normalized": max((r.normalized for r in on), default=None),
                "min_off_normalized": min((r.normalized for r in off), default=None),
            },
            "sampling_failed": self.sampling_failed,
            "notes": list(self.notes),
            "config": self.config,
            "points": [r.to_json() for r in self.records],
        }


def _record(p: IndicatorProfile, role: str, cfg: OracleConfig) -> PointRecord:
    ind = p.indicator
    norm = ind / cfg.reference_scale
    verdict = STATIONARY if norm <= cfg.tau else NOT_STATIONARY
    return PointRecord(p.location, role, ind, norm, verdict, p.widened)


def check_convergence(f: FiniteDistribution, cfg: OracleConfig, points, rel_tol: float | None = None) -> float:
    """Largest change of the radial profile when the angular order doubles, relative to the reference scale.

    Raises :class:`NumericValidityError` above ``rel_tol`` (default 1e-10 for
    Gaussians; a tenth of ``tau`` for bumps, whose edge layer converges slower).
    """
    if rel_tol is None:
        rel_tol = 1e-10 if isinstance(cfg.mollifier, Gaussian) else cfg.tau / 10
    worst = 0.0
    for x in points:
        a = indicator_profile(f, cfg, x)
        b = indicator_profile(f, cfg, x, quad_order=2 * cfg.quad_order)
        scale = max(cfg.reference_scale or 0.0, float(np.max(np.abs(a.means), initial=0.0)))
        change = float(np.max(np.abs(a.means - b.means), initial=0.0)) / scale
        worst = max(worst, change)
    if worst > rel_tol:
        raise NumericValidityError(f"doubling the angular order changed the profile by {worst:.3g} (relative)")
    return worst


def _grid_resolution(n: int) -> int:
    return 33 if n == 2 else 13


def verify_prediction(
    f: FiniteDistribution,
    pred,
    cfg: OracleConfig,
    on_samples: int = 100,
    off_samples: int = 100,
    seed: int = 0,
    convergence_points: int = 2,
) -> StationarityReport:
    """Check a predicted stationary set against the oracle.

    On-points are grid points of ``cfg.box`` satisfying the prediction,
    topped up with projected samples; off-points are random points of the box
    at least five mollifier widths from the predicted set.  Every on-point
    must be stationary and every off-point not.  For containment-only
    predictions a stationary off-point is recorded as unclassified instead of
    failing.
    """
    from .stationary import far_points, membership, sample_predicted_set, sample_zero_grid

    cfg = calibrate(f, cfg)
    n = f.dimension
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11CE]))
    notes: list[str] = []
    cfg_json = cfg.to_json()
    if pred.is_empty():
        notes.append("predicted set is empty; nothing to verify")
        return StationarityReport((), cfg.reference_scale, cfg.tau, cfg.r_grid, tuple(notes), False, cfg_json)
    base = np.array([float(v) for v in pred.basepoint]) if pred.basepoint else np.zeros(n)
    lo, hi = (np.asarray(b, float) for b in cfg.box)
    grid = np.array(sample_zero_grid(pred.generators, (lo - base, hi - base), _grid_resolution(n), 1e-12), float)
    grid = grid.reshape(-1, n) + base
    if grid.shape[0] > on_samples:
        grid = grid[np.sort(rng.choice(grid.shape[0], on_samples, replace=False))]
    on = [p for p in grid]
    if len(on) < on_samples:
        extra = sample_predicted_set(pred, cfg.box, on_samples - len(on), rng)
        on.extend(p for p in extra if membership(pred, p, 1e-9))
    if not on:
        notes.append("sampling failure: no point of the predicted set was found in the box")
    elif len(on) < on_samples:
        notes.append(f"only {len(on)} distinct on-points found (asked for {on_samples})")
    min_dist = 5 * cfg.mollifier.width
    off = list(far_points(pred, cfg.box, off_samples, min_dist, rng)) if off_samples else []
    if len(off) < off_samples:
        notes.append(f"only {len(off)} off-points at distance >= {min_dist:.3g} (asked for {off_samples})")
    if convergence_points:
        sample = on[:convergence_points] + off[:convergence_points]
        worst = check_convergence(f, cfg, sample)
        notes.append(f"angular-order doubling changed profiles by at most {worst:.3g} (relative)")
    profiles = indicators(f, cfg, on + off)
    records = [_record(p, "on", cfg) for p in profiles[: len(on)]]
    for p in profiles[len(on):]:
        rec = _record(p, "off", cfg)
        if pred.containment_only and rec.verdict == STATIONARY:
            rec = replace(rec, role="unclassified")
        records.append(rec)
    if any(r.widened for r in records):
        notes.append("radius grid widened at some points to cover the support plus three widths")
    if pred.containment_only:
        notes.append("containment-only prediction: stationary off-points are unclassified, not failures")
    return StationarityReport(tuple(records), cfg.reference_scale, cfg.tau, cfg.r_grid, tuple(notes), not on, cfg_json)
