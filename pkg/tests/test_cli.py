import csv
import json

import numpy as np
import pytest

from grasstool import __version__, cli, suite
from grasstool.chern import cubed_sphere, family_to_dict, monopole_family
from grasstool.grassmann import certify, point_to_dict
from grasstool.operators import operator_to_dict, random_projection


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_chern_constant_example(capsys):
    code, out, _ = run(capsys, "chern", "--family", "constant", "--resolution", "12")
    assert code == 0
    data = json.loads(out)
    assert data["c1"] == 0
    assert set(data) == {"c1", "residual", "max_plaquette_phase", "meta"}


def test_meta_block(capsys):
    _, out, _ = run(capsys, "chern", "--family", "monopole", "--resolution", "6", "--tol-spectral", "1e-7")
    meta = json.loads(out)["meta"]
    assert meta["version"] == __version__
    assert meta["tolerances"] == {"algebraic": 1e-10, "spectral": 1e-7, "rank_gap": 0.5}
    assert meta["config"]["resolution"] == 6 and meta["seed"] is None


def test_chern_from_file(tmp_path, capsys):
    path = tmp_path / "family.json"
    path.write_text(json.dumps(family_to_dict(monopole_family(cubed_sphere(5)))))
    code, out, _ = run(capsys, "chern", "--input", str(path))
    assert code == 0 and json.loads(out)["c1"] == -1


@pytest.mark.parametrize(
    "argv",
    [
        ["section"],
        ["retract", "--level", "4"],
        ["separation"],
        ["suite"],
        ["section", "--seed", "1", "--rank", "0"],
        ["retract", "--seed", "1", "--level", "20"],
        ["chern", "--resolution", "0"],
        ["chern", "--tol-algebraic", "-1"],
        ["states", "--P", "x.json"],
        ["nonsense"],
        [],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_unreadable_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "connect", "--P", str(bad), "--Q", str(bad))
    assert code == 2 and "cannot read" in err


def test_non_projection_input_exit_2(tmp_path, capsys):
    path = tmp_path / "A.json"
    path.write_text(json.dumps(operator_to_dict(np.array([[1.0, 1.0], [0.0, 0.0]]))))
    code, _, _ = run(capsys, "connect", "--P", str(path), "--Q", str(path))
    assert code == 2


def test_retract_csv(capsys):
    code, out, _ = run(capsys, "retract", "--level", "5", "--rank", "3", "--seed", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    assert meta["config"]["level"] == 5 and meta["seed"] == 1
    rows = list(csv.DictReader(lines[1:]))
    assert list(rows[0]) == ["t", "weak_dist", "trace", "rank"]
    assert len(rows) == 7
    assert float(rows[-1]["t"]) == 1.0 and int(rows[-1]["rank"]) == 0
    assert float(rows[-1]["weak_dist"]) < 1e-6


def test_retract_from_file(tmp_path, capsys):
    path = tmp_path / "P.json"
    path.write_text(json.dumps(point_to_dict(certify(random_projection(16, 2, 3)))))
    code, out, _ = run(capsys, "retract", "--input", str(path))
    assert code == 0 and len(out.splitlines()) == 2 + 6
    assert run(capsys, "retract", "--input", str(path), "--level", "3")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["section", "--seed", "3", "--samples", "10"],
        ["connect", "--seed", "3"],
        ["retract", "--seed", "3", "--level", "6"],
        ["states", "--seed", "3"],
        ["separation", "--seed", "3", "--pairs", "20"],
        ["chern", "--family", "qwz", "--resolution", "10"],
    ],
)
def test_outputs_are_byte_identical(argv, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([*argv, "--output", str(a)]) == 0
    assert cli.main([*argv, "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_section_report(capsys):
    code, out, _ = run(capsys, "section", "--seed", "7", "--samples", "20")
    data = json.loads(out)
    assert code == 0 and data["section"]["passed"] and data["bound_chain"]["passed"]


def test_connect_from_files(tmp_path, capsys):
    P, Q = (certify(random_projection(6, 2, s)) for s in (1, 2))
    (tmp_path / "P.json").write_text(json.dumps(point_to_dict(P)))
    (tmp_path / "Q.json").write_text(json.dumps(point_to_dict(Q)))
    code, out, _ = run(capsys, "connect", "--P", str(tmp_path / "P.json"), "--Q", str(tmp_path / "Q.json"), "--steps", "5")
    data = json.loads(out)
    assert code == 0 and len(data["path"]) == 6 and len(data["step_gaps"]) == 5


def test_states_from_files(tmp_path, capsys):
    P, Q = (certify(random_projection(6, 2, s)) for s in (1, 2))
    A = np.random.default_rng(0).standard_normal((6, 6))
    for name, obj in (("P", point_to_dict(P)), ("Q", point_to_dict(Q)), ("A", operator_to_dict(A))):
        (tmp_path / f"{name}.json").write_text(json.dumps(obj))
    code, out, _ = run(
        capsys, "states", "--P", str(tmp_path / "P.json"), "--Q", str(tmp_path / "Q.json"), "--A", str(tmp_path / "A.json")
    )
    data = json.loads(out)
    assert code == 0 and data["verdict"] and data["lhs"] <= data["bound"] + 1e-9


def test_separation_table(capsys):
    code, out, _ = run(capsys, "separation", "--seed", "1", "--pairs", "30")
    data = json.loads(out)
    assert code == 0 and len(data["table"]) == 30
    assert data["min_separation"] >= 1 - 1e-9
    assert data["weak_decay"] == [4.0**-k for k in range(1, 11)]


@pytest.mark.parametrize("passed, code", [(True, 0), (False, 1)])
def test_suite_exit_codes(passed, code, tmp_path, monkeypatch, capsys):
    fake = [suite.CheckResult(name, passed, {"x": 1.0}, 0.5) for name in suite.CHECKS]
    monkeypatch.setattr(suite, "run_suite", lambda dim, seed: fake)
    assert cli.main(["suite", "--seed", "7", "--output", str(tmp_path)]) == code
    report = json.loads((tmp_path / "suite.json").read_text())
    assert report["passed"] is passed and set(report["checks"]) == set(suite.CHECKS)
    # timings go to stderr only
    assert "seconds" not in (tmp_path / "suite.json").read_text()
    assert "0.50 s" in capsys.readouterr().err
