"""Command-line front end: ``nodalcone <subcommand> ...``.

Exit codes: 0 success, 1 verification FAIL, 2 configuration or schema
error, 3 numeric-validity failure (quadrature did not converge).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from . import schemas
from .coxeter import DEFAULT_MAX_PLANES, FiniteDistribution, Hyperplane, closure
from .harmonic import DEFAULT_MAX_EXTRA_DEGREE, find_harmonic_multiple, gauss_decompose
from .oracle import (
    NumericValidityError,
    OracleConfig,
    indicators,
    mollifier_from_json,
    verify_prediction,
    wave_eval,
)
from .polyalg import Polynomial, divides, iterated_laplacians, to_fraction
from .stationary import StationaryPrediction, predict_distribution

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid or unreadable input document."""


# -- input ------------------------------------------------------------------------


def _load_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _checked(document: Any, schema: dict, what: str) -> Any:
    try:
        schemas.validate(document, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{what} failed schema validation at {where}: {exc.message}") from exc
    return document


def load_config(path: str | Path) -> dict:
    return _checked(_load_json(path), schemas.CONFIG, "config")


def distribution_from_config(config: dict) -> FiniteDistribution:
    n = config["dimension"]
    sources = []
    for k, src in enumerate(config["sources"]):
        point = [to_fraction(v) for v in src["point"]]
        weight = Polynomial.from_json(src["weight"])
        if len(point) != n or weight.dimension != n:
            raise ConfigError(f"source {k} does not live in dimension {n}")
        sources.append((point, weight))
    try:
        return FiniteDistribution(n, sources)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def oracle_from_config(config: dict, f: FiniteDistribution, seed: int | None) -> OracleConfig:
    opts = config.get("oracle", {})
    n = f.dimension
    moll = opts.get("mollifier")
    if isinstance(moll, dict):
        moll = mollifier_from_json(moll, n)
    overrides: dict[str, Any] = {}
    if "quad_order" in opts:
        overrides["quad_order"] = opts["quad_order"]
    if "r_grid" in opts:
        g = opts["r_grid"]
        overrides["r_grid"] = (g["r_min"], g["r_max"], g["count"])
    if "tolerance" in opts:
        overrides["tau"] = opts["tolerance"]
    if "box" in opts:
        lo, hi = opts["box"]["lo"], opts["box"]["hi"]
        if len(lo) != n or len(hi) != n:
            raise ConfigError("oracle box must match the dimension")
        overrides["box"] = (tuple(lo), tuple(hi))
    overrides["seed"] = seed if seed is not None else opts.get("seed", 0)
    try:
        return OracleConfig.default(f, moll, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _candidates(config: dict) -> tuple[list[Polynomial], list[Hyperplane]]:
    cand = config.get("candidates", {})
    cones = [Polynomial.from_json(c) for c in cand.get("cones", [])]
    planes = [Hyperplane.from_json(h) for h in cand.get("hyperplanes", [])]
    return cones, planes


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad coordinate list {text!r}") from exc


def parse_times(text: str) -> np.ndarray:
    """``t1..t2:k`` (``k`` evenly spaced times) or a comma list."""
    try:
        if ".." in text:
            span, _, count = text.partition(":")
            a, b = (float(v) for v in span.split(".."))
            k = int(count) if count else 2
            if k < 1:
                raise ValueError
            times = np.linspace(a, b, k)
        else:
            times = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad time specification {text!r}; use t1..t2:k or a comma list") from exc
    if np.any(times <= 0):
        raise ConfigError("times must be positive")
    return times


# -- output -----------------------------------------------------------------------


def dumps(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(float(v), ".17g") for v in row])
    return buf.getvalue()


# -- subcommands ------------------------------------------------------------------


def cmd_predict(args) -> int:
    config = load_config(args.config)
    f = distribution_from_config(config)
    cones, planes = _candidates(config)
    pred = predict_distribution(f, cones, planes)
    _emit(dumps(pred.to_json()), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = load_config(args.config)
    f = distribution_from_config(config)
    cfg = oracle_from_config(config, f, args.seed)
    if args.prediction:
        data = _checked(_load_json(args.prediction), schemas.PREDICTION, "prediction")
        pred = StationaryPrediction.from_json(data)
        if pred.dimension != f.dimension:
            raise ConfigError("prediction dimension does not match the config")
    else:
        cones, planes = _candidates(config)
        pred = predict_distribution(f, cones, planes)
    samples = config.get("samples", {})
    on = args.on if args.on is not None else samples.get("on", 100)
    off = args.off if args.off is not None else samples.get("off", 100)
    report = verify_prediction(f, pred, cfg, on, off, seed=cfg.seed)
    _emit(dumps(report.to_json()), args.output)
    print(f"verify: {report.status}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def grid_points(lo: Sequence[float], hi: Sequence[float], resolution: int) -> np.ndarray:
    """Row-major grid (first coordinate varies slowest)."""
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def cmd_scan(args) -> int:
    config = load_config(args.config)
    f = distribution_from_config(config)
    cfg = oracle_from_config(config, f, args.seed)
    n = f.dimension
    if args.box:
        lo_text, sep, hi_text = args.box.partition(":")
        if not sep:
            raise ConfigError("--box must look like LO:HI, e.g. --box=-1,-1:1,1")
        lo, hi = _vector(lo_text), _vector(hi_text)
    else:
        lo, hi = list(cfg.box[0]), list(cfg.box[1])
    if len(lo) != n or len(hi) != n:
        raise ConfigError(f"--box needs {n} coordinates per corner")
    if args.resolution < 2:
        raise ConfigError("--resolution must be at least 2")
    pts = grid_points(lo, hi, args.resolution)
    values = [p.indicator for p in indicators(f, cfg, pts)]
    header = [f"x{i + 1}" for i in range(n)] + ["indicator"]
    _emit(_csv(header, (list(p) + [v] for p, v in zip(pts, values))), args.output)
    return EXIT_OK


def cmd_decompose(args) -> int:
    P = Polynomial.from_json(_checked(_load_json(args.polynomial), schemas.POLYNOMIAL, "polynomial"))
    try:
        dec = gauss_decompose(P)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(dumps(dec.to_json()), args.output)
    return EXIT_OK


def divisor_report(Psi: Polynomial, G: Polynomial, max_degree: int) -> dict:
    """Whether ``Psi`` divides every ``Δ^s G``, the quotients, and a harmonic-multiple search for ``Psi``.

    The search needs a homogeneous ``Psi``; otherwise it is reported as null.
    """
    chain = []
    failed_at = None
    for s, lap in enumerate(iterated_laplacians(G)):
        if lap.is_zero():
            continue
        q = divides(Psi, lap)
        if q is None and failed_at is None:
            failed_at = s
        chain.append({"laplacian_power": s, "laplacian": lap.to_json(), "quotient": None if q is None else q.to_json()})
    out = {
        "divides_all_laplacians": failed_at is None,
        "chain": chain,
        "harmonic_multiple": find_harmonic_multiple(Psi, max_degree).to_json() if Psi.is_homogeneous() else None,
    }
    if failed_at is not None:
        out["failed_at"] = failed_at
    return out


def cmd_divisor(args) -> int:
    Psi = Polynomial.from_json(_checked(_load_json(args.psi), schemas.POLYNOMIAL, "psi"))
    G = Polynomial.from_json(_checked(_load_json(args.g), schemas.POLYNOMIAL, "g"))
    if Psi.dimension != G.dimension:
        raise ConfigError("psi and g must share the dimension")
    if Psi.is_zero():
        raise ConfigError("psi must be nonzero")
    _emit(dumps(divisor_report(Psi, G, args.max_degree)), args.output)
    return EXIT_OK


def cmd_coxeter(args) -> int:
    data = _checked(_load_json(args.hyperplanes), schemas.HYPERPLANE_LIST, "hyperplanes")
    items = data["hyperplanes"] if isinstance(data, dict) else data
    if not items:
        raise ConfigError("need at least one hyperplane")
    try:
        planes = [Hyperplane.from_json(h) for h in items]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if len({h.dimension for h in planes}) != 1:
        raise ConfigError("hyperplanes must share the dimension")
    result = closure(planes, args.max_planes)
    _emit(dumps(result.to_json()), args.output)
    return EXIT_OK


def cmd_wave(args) -> int:
    config = load_config(args.config)
    f = distribution_from_config(config)
    cfg = oracle_from_config(config, f, args.seed)
    x = _vector(args.at)
    if len(x) != f.dimension:
        raise ConfigError(f"--at needs {f.dimension} coordinates")
    if f.dimension not in (2, 3):
        raise ConfigError("wave evaluation supports dimensions 2 and 3")
    times = parse_times(args.times)
    rows = [(t, wave_eval(f, cfg.mollifier, x, float(t), cfg.quad_order)) for t in times]
    _emit(_csv(["t", "u"], rows), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodalcone", description="Stationary sets of the wave equation with point-supported data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seeded: bool = False) -> None:
        p.add_argument("-o", "--output", help="write here instead of stdout")
        if seeded:
            p.add_argument("--seed", type=int, default=None, help="random seed (default: config value or 0)")

    p = sub.add_parser("predict", help="symbolic prediction of the stationary set")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="check a prediction against the numeric oracle")
    p.add_argument("config")
    p.add_argument("--prediction", help="prediction JSON (default: predict from the config)")
    p.add_argument("--on", type=int, default=None, help="points sampled on the predicted set")
    p.add_argument("--off", type=int, default=None, help="points sampled away from it")
    common(p, seeded=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", help="indicator over a grid, as CSV")
    p.add_argument("config")
    p.add_argument("--box", metavar="LO:HI", help="corners as comma lists, e.g. --box=-1,-1:1,1 (default: oracle box)")
    p.add_argument("--resolution", type=int, default=41)
    common(p, seeded=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("decompose", help="harmonic decomposition of a homogeneous polynomial")
    p.add_argument("polynomial")
    common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("divisor", help="does psi divide every iterated Laplacian of g")
    p.add_argument("psi")
    p.add_argument("g")
    p.add_argument("--max-degree", type=int, default=DEFAULT_MAX_EXTRA_DEGREE)
    common(p)
    p.set_defaults(func=cmd_divisor)

    p = sub.add_parser("coxeter", help="reflection closure of a hyperplane set")
    p.add_argument("hyperplanes")
    p.add_argument("--max-planes", type=int, default=DEFAULT_MAX_PLANES)
    common(p)
    p.set_defaults(func=cmd_coxeter)

    p = sub.add_parser("wave", help="mollified wave solution u(x, t), as CSV")
    p.add_argument("config")
    p.add_argument("--at", required=True, help="comma-separated point")
    p.add_argument("--times", required=True, help="t1..t2:k or comma list")
    common(p, seeded=True)
    p.set_defaults(func=cmd_wave)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericValidityError as exc:
        print(f"numeric validity failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
