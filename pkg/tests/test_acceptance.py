"""End-to-end acceptance checks; each test records one PASS/FAIL line in the terminal summary."""

import math
import time

import numpy as np
import pytest

from helpers import battery_case, random_homogeneous, record
from nodalcone.coxeter import FiniteDistribution, Hyperplane, closure, span_support
from nodalcone.harmonic import divides_all_laplacians, gauss_decompose
from nodalcone.oracle import (
    Gaussian,
    OracleConfig,
    calibrate,
    indicators,
    mollified_eval,
    mollified_values,
    spherical_mean,
    verify_prediction,
    wave_eval,
)
from nodalcone.polyalg import Polynomial
from nodalcone.stationary import membership, predict_distribution, predict_single_point, sample_zero_grid

x, y = Polynomial.variables(2)
X, Y, Z = Polynomial.variables(3)
r2 = Polynomial.norm_squared(2)

PLANAR = {"xy": x * y, "x^2-y^2": x**2 - y**2, "Re(x+iy)^3": x**3 - 3 * x * y**2}
SPATIAL = {"xy": X * Y, "z(x^2-y^2)": Z * (X**2 - Y**2)}
SAMPLES = 100
BATTERY_SEEDS = range(20)


def run_verify(G: Polynomial, mollifier=None, **overrides):
    f = FiniteDistribution.single(G)
    cfg = OracleConfig.default(f, mollifier, **overrides)
    start = time.perf_counter()
    report = verify_prediction(f, predict_single_point(G), cfg, SAMPLES, SAMPLES)
    return report, time.perf_counter() - start


def zero_set_check(report, elapsed: float, limit: float) -> tuple[bool, str]:
    on, off = report.by_role("on"), report.by_role("off")
    max_on = max(r.normalized for r in on)
    min_off = min(r.normalized for r in off)
    ok = report.passed and len(on) >= SAMPLES and len(off) >= SAMPLES and max_on <= 1e-6 and min_off > 1e-3 and elapsed < limit
    return ok, f"{len(on)} on (max {max_on:.2g}), {len(off)} off (min {min_off:.2g}), {elapsed:.1f}s"


def verdicts(report) -> dict:
    return {r.location: r.verdict for r in report.records}


@pytest.fixture(scope="module")
def planar_reports():
    return {name: run_verify(G) for name, G in PLANAR.items()}


@pytest.fixture(scope="module")
def spatial_reports():
    return {name: run_verify(G) for name, G in SPATIAL.items()}


@pytest.fixture(scope="module")
def battery():
    return [battery_case(s) for s in BATTERY_SEEDS]


def test_planar_harmonic_zero_sets_are_stationary(planar_reports):
    results = {name: zero_set_check(*rep, 30.0) for name, rep in planar_reports.items()}
    ok = all(r[0] for r in results.values())
    record(1, ok, "; ".join(f"{name}: {r[1]}" for name, r in results.items()))
    assert ok


def test_spatial_harmonic_zero_sets_are_stationary(spatial_reports):
    results = {name: zero_set_check(*rep, 180.0) for name, rep in spatial_reports.items()}
    ok = all(r[0] for r in results.values())
    record(2, ok, "; ".join(f"{name}: {r[1]}" for name, r in results.items()))
    assert ok


def test_symbolic_membership_agrees_with_oracle(battery):
    bad = sum(c.disagreements for c in battery)
    on = sum(len(c.on_points) for c in battery)
    far = sum(len(c.far_points) for c in battery)
    ok = bad == 0 and on > 0 and far > 0
    record(3, ok, f"{bad} disagreements over {len(battery)} weights ({on} on-grid, {far} far points)")
    assert ok


def test_decomposition_round_trip():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    failures = []
    for i in range(50):
        n = int(rng.integers(1, 5))
        degree = int(rng.integers(0, 9))
        G = random_homogeneous(rng, n, degree, density=0.5)
        d = gauss_decompose(G)
        layers_ok = all(h.laplacian().is_zero() for h in d.components)
        if d.reconstruct() != G or not layers_ok:
            failures.append(i)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10
    record(4, ok, f"50 weights, failures {failures}, {elapsed:.2f}s")
    assert ok


def test_divisor_criterion_both_directions():
    truths, falses, oracle_bad, checked = [], [], 0, 0
    for psi in (x * y, x**2 - y**2):
        for m in range(4):
            G = psi * r2**m
            truths.append(divides_all_laplacians(psi, G))
            f = FiniteDistribution.single(G)
            cfg = calibrate(f, OracleConfig.default(f))
            pts = sample_zero_grid([psi], ([-1, -1], [1, 1]), 21, 0)
            profiles = indicators(f, cfg, [tuple(float(v) for v in p) for p in pts])
            oracle_bad += sum(p.indicator / cfg.reference_scale > cfg.tau for p in profiles)
            checked += len(profiles)
        falses.append(divides_all_laplacians(psi, psi + x ** (psi.degree + 1)))
    ok = all(truths) and not any(falses) and oracle_bad == 0
    record(5, ok, f"true cases {sum(truths)}/8, false cases {sum(not v for v in falses)}/2, oracle misses {oracle_bad}/{checked}")
    assert ok


def test_mirror_stationarity():
    f = FiniteDistribution.point_masses([(1, 0), (-1, 0)], [1, -1])
    cfg = calibrate(f, OracleConfig.default(f))
    mirror = [(0.0, float(b)) for b in np.linspace(-2, 2, 50)]
    worst = max(p.indicator for p in indicators(f, cfg, mirror)) / cfg.reference_scale
    # dihedral orbit of a generic point, weighted by the sign of each group element
    p0 = np.array([0.7, 0.2])
    flip = np.diag([1.0, -1.0])
    pts, masses = [], []
    for k in range(3):
        c, s = math.cos(2 * math.pi * k / 3), math.sin(2 * math.pi * k / 3)
        rot = np.array([[c, -s], [s, c]])
        pts += [tuple(rot @ p0), tuple(rot @ flip @ p0)]
        masses += [1, -1]
    orbit = FiniteDistribution.point_masses(pts, masses)
    pred = predict_distribution(orbit)
    report = verify_prediction(orbit, pred, OracleConfig.default(orbit))
    ok = worst < 1e-12 and len(pred.hyperplanes) == 3 and report.passed
    record(6, ok, f"bisector max {worst:.2g}; triangle orbit: {len(pred.hyperplanes)} axes, verify {report.status}")
    assert ok


def test_flat_cones():
    pair = FiniteDistribution.point_masses([(0, 0, 1), (0, 0, -1)], [1, -1])
    pair_pred = predict_distribution(pair)
    bisector = Hyperplane.from_form([0, 0, 1], 0)
    pair_ok = [h.exact for h in pair_pred.hyperplanes] == [bisector.exact]
    pair_report = verify_prediction(pair, pair_pred, OracleConfig.default(pair))
    single = FiniteDistribution.single(X)
    single_report = verify_prediction(single, predict_distribution(single), OracleConfig.default(single))
    axis = FiniteDistribution(3, (((0, 0, 1), X), ((0, 0, -1), X * Z - 3 * X)))
    axis_pred = predict_distribution(axis)
    axis_report = verify_prediction(axis, axis_pred, OracleConfig.default(axis))
    edge = span_support(axis)
    edge_ok = edge.dim == 1 and edge.contains((0, 0, 5)) and edge.contains((0, 0, -3)) and not edge.contains((1, 0, 0))
    ok = pair_ok and pair_report.passed and single_report.passed and axis_report.passed and membership(axis_pred, (0, 0.4, 0.9)) and edge_ok
    record(
        7,
        ok,
        f"z=0 {pair_report.status}; source (0,x) {single_report.status}; "
        f"odd weights on the z-axis {axis_report.status}; edge is the z-axis: {edge_ok}",
    )
    assert ok


def test_dihedral_closure_is_finite():
    start = time.perf_counter()
    wrong = []
    for q in range(2, 13):
        for p in range(1, q):
            if math.gcd(p, q) != 1:
                continue
            theta = math.pi * p / q
            lines = [Hyperplane.from_normal([0.0, 1.0]), Hyperplane.from_normal([-math.sin(theta), math.cos(theta)])]
            result = closure(lines)
            if result.status != "Closed" or len(result.hyperplanes) != q:
                wrong.append((p, q))
    generic = closure([Hyperplane.from_normal([0.0, 1.0]), Hyperplane.from_normal([-math.sin(1.0), math.cos(1.0)])])
    elapsed = time.perf_counter() - start
    ok = not wrong and generic.status == "ExceededBound" and elapsed < 1
    record(8, ok, f"mismatched angles {wrong}; 1 rad -> {generic.status}; {elapsed:.2f}s")
    assert ok


def test_wave_formula_consistency(planar_reports):
    # Kirchhoff: u = t * spherical mean, checked against a fine generic sphere rule
    f3 = FiniteDistribution.single(Z * (X**2 - Y**2))
    g3 = Gaussian(0.1, 3)
    xq = np.array([0.12, -0.05, 0.2])
    kirchhoff = 0.0
    for t in (0.05, 0.2, 0.5):
        direct = t * spherical_mean(lambda P: mollified_values(f3, g3, P), xq, t, 256)
        kirchhoff = max(kirchhoff, abs(wave_eval(f3, g3, xq, t) - direct) / abs(direct))
    # small times: u / t tends to the mollified source
    small = 0.0
    for G, q in ((x * y, (0.13, 0.07)), (Z * (X**2 - Y**2), (0.13, 0.04, 0.09))):
        f = FiniteDistribution.single(G)
        phi = Gaussian(0.1, G.dimension)
        t = 1e-3 * phi.sigma
        target = mollified_eval(f, phi, q)
        small = max(small, abs(wave_eval(f, phi, q, t) / t - target) / abs(target))
    # vanishing on stationary points of the planar cases
    worst = 0.0
    count = 0
    times = np.linspace(0.05, 2.0, 8)
    for (name, G), take in zip(PLANAR.items(), (7, 7, 6)):
        report, _ = planar_reports[name]
        f = FiniteDistribution.single(G)
        ref = report.reference_scale
        phi = Gaussian(0.1, 2)
        for rec in report.by_role("on")[:take]:
            count += 1
            for t in times:
                worst = max(worst, abs(wave_eval(f, phi, rec.location, float(t))) / (t * ref))
    ok = kirchhoff <= 1e-12 and small <= 1e-4 and worst <= 1e-6 and count == 20
    record(9, ok, f"Kirchhoff rel {kirchhoff:.2g}; small-t rel {small:.2g}; |u|/(t ref) max {worst:.2g} on {count} points")
    assert ok


def test_verdicts_are_robust(planar_reports, spatial_reports, battery):
    changed = []
    for group, base in (("2D", PLANAR), ("3D", SPATIAL)):
        reports = planar_reports if group == "2D" else spatial_reports
        for name, G in base.items():
            ref, _ = reports[name]
            for label, variant in (("2x quad", {"quad_order": 2 * 64}), ("bump", {"mollifier": "bump"})):
                mollifier = variant.pop("mollifier", None)
                alt, _ = run_verify(G, mollifier, **variant)
                if alt.status != ref.status or verdicts(alt) != verdicts(ref):
                    changed.append(f"{group} {name} {label}")
    for label, kwargs in (("2x quad", {"quad_order": 128}), ("bump", {"mollifier": "bump"})):
        for case in battery:
            alt = battery_case(case.seed, **kwargs)
            same = (alt.on_points, alt.far_points) == (case.on_points, case.far_points)
            if not same or (alt.on_verdicts, alt.far_verdicts) != (case.on_verdicts, case.far_verdicts):
                changed.append(f"battery seed {case.seed} {label}")
    ok = not changed
    record(10, ok, f"changed verdicts: {changed or 'none'}")
    assert ok

