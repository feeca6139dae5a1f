"""Shared builders for the test suite: random polynomials and the symbolic-numeric battery."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from nodalcone.coxeter import FiniteDistribution
from nodalcone.oracle import OracleConfig, calibrate, indicators
from nodalcone.polyalg import OrthogonalAffineMap, Polynomial, compose_affine, monomials
from nodalcone.stationary import DistanceEstimator, membership, predict_single_point, sample_zero_grid

STRUCTURES = ("odd-coordinate", "odd-swap", "odd-two", "generic-odd")


def random_homogeneous(rng: np.random.Generator, n: int, degree: int, density: float = 0.6, span: int = 3) -> Polynomial:
    """Nonzero homogeneous polynomial with small integer coefficients."""
    while True:
        terms = {}
        for m in monomials(n, degree):
            if rng.random() < density:
                c = int(rng.integers(-span, span + 1))
                if c:
                    terms[m] = Fraction(c)
        if terms:
            return Polynomial(n, terms)


def _flip(P: Polynomial, axes) -> Polynomial:
    diag = [[(-1 if i in axes and i == j else 1) if i == j else 0 for j in range(P.dimension)] for i in range(P.dimension)]
    return compose_affine(P, OrthogonalAffineMap(diag))


def _swap(P: Polynomial, i: int, j: int) -> Polynomial:
    perm = list(range(P.dimension))
    perm[i], perm[j] = perm[j], perm[i]
    return compose_affine(P, OrthogonalAffineMap.permutation(perm))


def structured_weight(rng: np.random.Generator, n: int, structure: str, max_degree: int = 5) -> Polynomial:
    """Random homogeneous weight of degree <= ``max_degree`` with a built-in odd symmetry."""
    while True:
        if structure == "generic-odd":
            degree = int(rng.choice([d for d in (1, 3, 5) if d <= max_degree]))
        else:
            degree = int(rng.integers(2 if structure == "odd-two" else 1, max_degree + 1))
        H = random_homogeneous(rng, n, degree)
        if structure == "odd-coordinate":
            G = H - _flip(H, {0})
        elif structure == "odd-swap":
            G = H - _swap(H, 0, 1)
        elif structure == "odd-two":
            G = H - _flip(H, {0}) - _flip(H, {1}) + _flip(H, {0, 1})
        else:
            G = H
        if not G.is_zero():
            return G


@dataclass
class BatteryCase:
    seed: int
    n: int
    structure: str
    weight: Polynomial
    on_points: list
    far_points: list
    on_verdicts: list
    far_verdicts: list

    @property
    def disagreements(self) -> int:
        return sum(not v for v in self.on_verdicts) + sum(v for v in self.far_verdicts)


def battery_case(seed: int, mollifier=None, quad_order: int = 64, far_distance: float = 0.25) -> BatteryCase:
    """One symbolic-numeric agreement check on an exact rational grid of the oracle box."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA77]))
    n = 2 if seed % 2 == 0 else 3
    structure = STRUCTURES[(seed // 2) % len(STRUCTURES)]
    G = structured_weight(rng, n, structure)
    f = FiniteDistribution.single(G)
    pred = predict_single_point(G)
    cfg = calibrate(f, OracleConfig.default(f, mollifier, quad_order=quad_order))
    resolution = 21 if n == 2 else 7
    lo = [Fraction(-1)] * n
    hi = [Fraction(1)] * n
    on = sample_zero_grid(pred.generators, (lo, hi), resolution, 0)
    assert all(membership(pred, p, 0) for p in on)
    grid = np.array([[float(v) for v in p] for p in np.ndindex(*(resolution,) * n)]) * (2 / (resolution - 1)) - 1
    dist = DistanceEstimator(pred, cfg.box, np.random.default_rng(seed))(grid)
    candidates = grid[dist >= far_distance]
    count = min(len(candidates), max(len(on), 10))
    far = candidates[np.sort(rng.choice(len(candidates), count, replace=False))] if count else candidates[:0]
    on_f = [tuple(float(v) for v in p) for p in on]
    profiles = indicators(f, cfg, on_f + [tuple(p) for p in far])
    stationary = [p.indicator / cfg.reference_scale <= cfg.tau for p in profiles]
    return BatteryCase(seed, n, structure, G, on_f, [tuple(p) for p in far], stationary[: len(on_f)], stationary[len(on_f):])


CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> bool:
    """Print and keep one PASS/FAIL line for an acceptance criterion."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)
    return ok
