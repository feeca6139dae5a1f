import csv
import io
import json
import math

import pytest

from nodalcone import schemas
from nodalcone.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NUMERIC, EXIT_OK, main, parse_times
from nodalcone.polyalg import Polynomial

x, y = Polynomial.variables(2)


def source_config(weight: Polynomial, point=None, **extra) -> dict:
    n = weight.dimension
    cfg = {"dimension": n, "sources": [{"point": [str(v) for v in (point or [0] * n)], "weight": weight.to_json()}]}
    cfg.update(extra)
    return cfg


@pytest.fixture
def write(tmp_path):
    def _write(name: str, document) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(document) if not isinstance(document, str) else document, encoding="utf-8")
        return str(path)

    return _write


def run(argv, capsys) -> tuple[int, str]:
    code = main(argv)
    return code, capsys.readouterr().out


def test_predict_harmonic_source(write, capsys):
    code, out = run(["predict", write("xy.json", source_config(x * y))], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    schemas.validate(doc, schemas.PREDICTION)
    assert doc["generators_text"] == ["x*y"]
    assert len(doc["hyperplanes"]) == 2
    assert doc["containment_only"] is False


def test_predict_multi_source_is_containment_only(write, capsys):
    cfg = {
        "dimension": 2,
        "sources": [
            {"point": ["1", "0"], "weight": Polynomial.constant(2, 1).to_json()},
            {"point": ["-1", "0"], "weight": Polynomial.constant(2, -1).to_json()},
        ],
    }
    code, out = run(["predict", write("pair.json", cfg)], capsys)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["containment_only"] is True
    assert doc["hyperplanes"][0]["exact"] == {"normal": ["1", "0"], "offset": "0"}


def test_verify_passes_and_round_trips(write, capsys, tmp_path):
    path = write("xy.json", source_config(x * y, samples={"on": 20, "off": 20}))
    out_path = tmp_path / "report.json"
    assert main(["verify", path, "-o", str(out_path)]) == EXIT_OK
    doc = json.loads(out_path.read_text())
    schemas.validate(doc, schemas.REPORT)
    assert doc["status"] == "PASS"
    assert doc["summary"]["on_points"] == 20 and doc["summary"]["off_points"] == 20
    assert "verify: PASS" in capsys.readouterr().err


def test_verify_wrong_prediction_fails(write, capsys):
    config = write("x2y.json", source_config(x**2 * y))
    code, out = run(["predict", write("xx.json", source_config(x))], capsys)
    wrong = write("wrong.json", out)
    code, out = run(["verify", config, "--prediction", wrong, "--on", "10", "--off", "10"], capsys)
    assert code == EXIT_FAIL
    assert json.loads(out)["status"] == "FAIL"


def test_verify_is_byte_identical_under_a_seed(write, capsys):
    path = write("c.json", source_config(x**2 - y**2))
    outs = [run(["verify", path, "--on", "8", "--off", "8", "--seed", "5"], capsys)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["config"]["seed"] == 5


def test_numeric_failure_exit_code(write, capsys):
    path = write("starved.json", source_config(x**3 - 3 * x * y**2, oracle={"mollifier": {"kind": "gaussian", "sigma": 0.02}, "quad_order": 4, "r_grid": {"r_min": 0.01, "r_max": 1.0, "count": 16}}))
    code, _ = run(["verify", path, "--on", "4", "--off", "4"], capsys)
    assert code == EXIT_NUMERIC


@pytest.mark.parametrize(
    "document",
    [
        "{not json",
        {"dimension": 2},
        {"dimension": 2, "sources": [], "bogus": 1},
        source_config(x * y, oracle={"quad_order": 64, "unknown": True}),
        source_config(x * y, oracle={"tolerance": 2.0}),
        {"dimension": 2, "sources": [{"point": ["0"], "weight": (x * y).to_json()}]},
        {"dimension": 2, "sources": [{"point": ["0", "0"], "weight": {"dimension": 2, "terms": [{"exps": [1, 1], "coeff": "1/0"}]}}]},
    ],
)
def test_bad_configs_exit_two(write, capsys, document):
    code, _ = run(["predict", write("bad.json", document)], capsys)
    assert code == EXIT_CONFIG


def test_missing_file_exits_two(capsys, tmp_path):
    assert main(["predict", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_scan_writes_csv(write, capsys):
    path = write("xy.json", source_config(x * y))
    code, out = run(["scan", path, "--box=-1,-1:1,1", "--resolution", "3"], capsys)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x1", "x2", "indicator"]
    assert len(rows) == 10
    assert [float(v) for v in rows[1][:2]] == [-1.0, -1.0]
    assert [float(v) for v in rows[2][:2]] == [-1.0, 0.0]
    center = rows[5]
    assert float(center[2]) < 1e-12 * max(float(r[2]) for r in rows[1:])


def test_scan_bad_box(write, capsys):
    path = write("xy.json", source_config(x * y))
    assert run(["scan", path, "--box=-1:1"], capsys)[0] == EXIT_CONFIG
    assert run(["scan", path, "--box", "0,0"], capsys)[0] == EXIT_CONFIG


def test_decompose(write, capsys):
    code, out = run(["decompose", write("p.json", (x**2).to_json())], capsys)
    doc = json.loads(out)
    schemas.validate(doc, schemas.DECOMPOSITION)
    assert Polynomial.from_json(doc["components"][0]["harmonic"]) == (x**2 - y**2) / 2
    assert run(["decompose", write("q.json", (x**2 + y).to_json())], capsys)[0] == EXIT_CONFIG


def test_divisor(write, capsys):
    psi = write("psi.json", (x * y).to_json())
    good = write("g.json", (x * y * Polynomial.norm_squared(2)).to_json())
    code, out = run(["divisor", psi, good], capsys)
    doc = json.loads(out)
    schemas.validate(doc, schemas.DIVISOR)
    assert code == EXIT_OK and doc["divides_all_laplacians"] is True
    assert doc["harmonic_multiple"]["status"] == "Found"
    bad = write("h.json", (x**3).to_json())
    doc = json.loads(run(["divisor", psi, bad], capsys)[1])
    assert doc["divides_all_laplacians"] is False and doc["failed_at"] == 0


def test_coxeter_sixty_degrees(write, capsys):
    lines = [{"normal": [0.0, 1.0], "offset": 0.0}, {"normal": [-math.sin(math.pi / 3), math.cos(math.pi / 3)], "offset": 0.0}]
    code, out = run(["coxeter", write("lines.json", lines)], capsys)
    doc = json.loads(out)
    schemas.validate(doc, schemas.CLOSURE)
    assert code == EXIT_OK
    assert doc["status"] == "Closed" and len(doc["hyperplanes"]) == 3 and doc["group_order_bound"] == 6


def test_coxeter_bound_and_bad_input(write, capsys):
    lines = {"hyperplanes": [{"normal": [0.0, 1.0], "offset": 0.0}, {"normal": [-math.sin(1.0), math.cos(1.0)], "offset": 0.0}]}
    doc = json.loads(run(["coxeter", write("l.json", lines), "--max-planes", "10"], capsys)[1])
    assert doc["status"] == "ExceededBound"
    assert run(["coxeter", write("e.json", [])], capsys)[0] == EXIT_CONFIG
    assert run(["coxeter", write("z.json", [{"normal": [0, 0], "offset": 0}])], capsys)[0] == EXIT_CONFIG


def test_wave_csv(write, capsys):
    path = write("xy.json", source_config(x * y))
    code, out = run(["wave", path, "--at", "0,0.4", "--times", "0.1..0.5:5"], capsys)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "u"] and len(rows) == 6
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert all(abs(float(r[1])) < 1e-12 for r in rows[1:])


def test_parse_times():
    assert list(parse_times("0.5,1,2")) == [0.5, 1.0, 2.0]
    assert list(parse_times("1..2:3")) == [1.0, 1.5, 2.0]
    assert list(parse_times("1..2")) == [1.0, 2.0]
    for bad in ("0..1:3", "-1,2", "a,b", "1..2:0", "1..x:3"):
        with pytest.raises(ValueError):
            parse_times(bad)


def test_thread_count_does_not_change_output(write, capsys, monkeypatch):
    path = write("c.json", source_config(x**2 - y**2))
    argv = ["scan", path, "--box=-1,-1:1,1", "--resolution", "4"]
    monkeypatch.setenv("NODALCONE_THREADS", "1")
    serial = run(argv, capsys)[1]
    monkeypatch.setenv("NODALCONE_THREADS", "3")
    assert run(argv, capsys)[1] == serial
