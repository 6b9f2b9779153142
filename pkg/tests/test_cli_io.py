import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qinstrument import cli
from qinstrument.io import read_csv, write_csv
from qinstrument.verify import CheckResult


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_roundtrip_exact(xs):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = write_csv(Path(d) / "x.csv", {"x": xs, "i": list(range(len(xs)))}, {"seed": 3, "note": "a: b"})
        h, cols = read_csv(p)
    assert h == {"seed": 3, "note": "a: b"}
    np.testing.assert_array_equal(cols["x"], np.asarray(xs, dtype=float))


def test_csv_rejects_ragged(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", {"a": [1, 2], "b": [1]}, {})


def _run(args):
    return cli.main(args)


def test_simulate_deterministic_bytes(tmp_path):
    args = ["simulate", "--case", "ism:1/2", "--N", "12", "--T", "0.1", "--dt", "0.01", "--seed", "7", "--out"]
    assert _run(args + [str(tmp_path / "a")]) == 0
    assert _run(args + [str(tmp_path / "a2")]) == 0
    for name in ("trajectories.csv", "coordinates.csv", "metrics.csv"):
        a = (tmp_path / "a" / name).read_text().replace("/a2", "/a")
        b = (tmp_path / "a2" / name).read_text().replace("/a2", "/a")
        assert a == b


def test_simulate_worker_count_invariant(tmp_path, monkeypatch):
    args = ["simulate", "--case", "single:1,-1", "--N", "30", "--T", "0.1", "--dt", "0.01", "--seed", "2"]
    _run(args + ["--out", str(tmp_path / "one")])
    monkeypatch.setenv("QINSTRUMENT_WORKERS", "2")
    _run(args + ["--out", str(tmp_path / "two")])
    _, a = read_csv(tmp_path / "one" / "trajectories.csv")
    _, b = read_csv(tmp_path / "two" / "trajectories.csv")
    np.testing.assert_array_equal(a["log_norm"], b["log_norm"])


def test_single_case_has_analytic_columns(tmp_path):
    assert _run(["simulate", "--case", "single:1,-1", "--N", "50", "--T", "0.2", "--dt", "0.01", "--out", str(tmp_path)]) == 0
    h, cols = read_csv(tmp_path / "metrics.csv")
    assert {"empirical_density", "analytic_density"} <= set(cols)
    assert h["master_seed"] == 0 and h["N"] == 50
    np.testing.assert_allclose(cols["r_mean"], 0.2, atol=1e-12)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"case": "spqm:8", "N": 4, "T": 0.05, "dt": 0.01, "seed": 1}))
    out = tmp_path / "o"
    assert _run(["simulate", "--config", str(cfg), "--N", "3", "--out", str(out)]) == 0
    h, cols = read_csv(out / "trajectories.csv")
    assert h["config"]["N"] == 3 and h["config"]["case"] == "spqm:8"
    assert len(cols["log_norm"]) == 3


@pytest.mark.parametrize(
    "args",
    [
        ["simulate", "--N", "0"],
        ["simulate", "--case", "bogus"],
        ["simulate", "--T", "1", "--dt", "0.3"],
        ["simulate", "--sampling", "maybe"],
        ["verify", "--suite", "nope"],
        ["closure", "jz @ mars"],
        ["frobnicate"],
    ],
)
def test_usage_errors(args, tmp_path):
    assert _run(args + (["--out", str(tmp_path)] if args[0] == "simulate" else [])) == 2


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert _run(["simulate", "--config", str(cfg)]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from qinstrument.exceptions import DegenerateTrajectoryError

    def boom(*a, **k):
        raise DegenerateTrajectoryError("singular")

    monkeypatch.setattr(cli, "pile_up_ensemble", boom)
    assert _run(["simulate", "--N", "2", "--T", "0.01", "--dt", "0.01", "--out", str(tmp_path)]) == 3
    assert "DegenerateTrajectoryError" in (tmp_path / "diagnostics.txt").read_text()


def test_closure_command(capsys, tmp_path):
    assert _run(["closure", "x + quad @ abelian", "--out", str(tmp_path / "r.txt")]) == 0
    assert "dims: [1, 2]" in capsys.readouterr().out
    assert _run(["closure", "jz,jx + quad @ universal su2, cap=60"]) == 0
    assert "ChaoticUpToCap" in capsys.readouterr().out


@pytest.mark.parametrize("suite", ["closure", "meter", "channels"])
def test_fast_verify_suites(suite, tmp_path):
    out = tmp_path / "v.json"
    assert _run(["verify", "--suite", suite, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and all(c["passed"] for c in rep["checks"])


def test_verify_failure_exit_code(monkeypatch):
    import qinstrument.verify as v

    bad = CheckResult("0", "x", False, 1.0, 0.0)
    monkeypatch.setattr(v, "run_suite", lambda name: {"suite": name, "passed": False, "checks": [bad.to_dict()], "results": [bad]})
    assert _run(["verify", "--suite", "closure"]) == 4


def test_meter_command(tmp_path):
    assert _run(["meter", "--dt", "1e-4", "--out", str(tmp_path)]) == 0
    _, cols = read_csv(tmp_path / "meter.csv")
    assert np.all(cols["max_deviation"] < 1e-6)
