import csv
import json
import math

import pytest

from bartnikmass.cli import main
from bartnikmass.errors import ConfigurationError
from bartnikmass.pipeline import RunConfig, load_config, parse_metric


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_bound_round_sphere(tmp_path):
    out = tmp_path / "o"
    assert main(["bound", "--metric", "round 1", "--H", "1", "--out", str(out)]) == 0
    rep = read_json(out / "bound.json")
    assert rep["bound"] == pytest.approx(0.375, abs=1e-12)
    assert rep["branch"] == "hawking-like"
    assert (out / "collar.csv").exists() and (out / "path.csv").exists()


def test_bound_round_sphere_large_H(tmp_path):
    assert main(["bound", "--metric", "round 1", "--H", "3", "--out", str(tmp_path)]) == 0
    rep = read_json(tmp_path / "bound.json")
    assert rep["bound"] == 0.0 and rep["branch"] == "zero-clamp"
    assert rep["source"] == "theorem1-largeH"


def test_bound_bump(tmp_path):
    assert main(["bound", "--metric", "bump 2 0 0.05", "--H", "1", "--out", str(tmp_path)]) == 0
    rep = read_json(tmp_path / "bound.json")
    assert 0 < rep["bound"] <= 0.5
    assert rep["checks_pass"]
    assert {c["family"] for c in rep["candidates"]} == {"theorem1", "theorem2"}


def test_bound_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["bound", "--metric", "round 1.3", "--H", "0.8",
                     "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "bound.json").read_bytes() == (tmp_path / "b" / "bound.json").read_bytes()


def test_no_branch_exit_code(tmp_path, capsys):
    code = main(["bound", "--metric", "bump 2 0 0.8", "--H", "0.5", "--out", str(tmp_path)])
    assert code == 2
    assert "H_min" in capsys.readouterr().err


def test_theorem2_family_needs_nonnegative_curvature(tmp_path):
    code = main(["bound", "--metric", "bump 2 0 0.8", "--H", "0.5", "--family", "theorem2",
                 "--out", str(tmp_path)])
    assert code == 2


def test_input_errors_exit_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("garbage\n1,2\n", encoding="utf-8")
    assert main(["verify", "--metric", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["bound", "--metric", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1
    assert main(["bound", "--metric", "round 1", "--H", "-1", "--out", str(tmp_path)]) == 1
    cfg = tmp_path / "c.cfg"
    cfg.write_text("lmax = 15\nnot_a_key = 3\n", encoding="utf-8")
    assert main(["bound", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a run\nmetric = bump 2 0 0.05\nH = 0.5\nn-times = 129\nstrict = yes\n"
                   "feas_tol = 1e-7   # looser\n", encoding="utf-8")
    rc = load_config(cfg, H=0.7)
    assert rc.metric == "bump 2 0 0.05" and rc.n_times == 129 and rc.strict
    assert rc.H == 0.7 and rc.feas_tol == 1e-7
    with pytest.raises(ConfigurationError):
        RunConfig(feas_tol=0.0)
    with pytest.raises(ConfigurationError):
        RunConfig(H_min=1.0, H_max=0.5, H_steps=3)
    with pytest.raises(ConfigurationError):
        RunConfig(family="theorem9")


def test_metric_sources(tmp_path):
    grid = RunConfig(lmax=15).grid()
    coeff = tmp_path / "w.txt"
    coeff.write_text("# l m value\n2 0 0.05\n", encoding="utf-8")
    a = parse_metric(str(coeff), grid)
    b = parse_metric("bump 2 0 0.05", grid)
    assert a.rg == pytest.approx(b.rg, rel=1e-14)
    with pytest.raises(ConfigurationError):
        parse_metric("ellipsoid 2", grid)


def test_sweep_round_closed_form(tmp_path):
    assert main(["sweep", "--metric", "round 1", "--H-min", "0.1", "--H-max", "3",
                 "--H-steps", "30", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 30
    for r in rows:
        H = float(r["H"])
        assert float(r["bound"]) == pytest.approx(max(0.5 * (1 - H * H / 4), 0.0), abs=1e-10)
    diag = read_json(tmp_path / "sweep.json")["diagnostics"]
    assert diag["bound_nonincreasing_in_H"]


def test_sweep_bump_small_H_limit(tmp_path):
    assert main(["sweep", "--metric", "bump 2 0 0.05", "--H-min", "0.02", "--H-max", "0.1",
                 "--H-steps", "2", "--out", str(tmp_path)]) == 0
    data = read_json(tmp_path / "sweep.json")
    rg = data["diagnostics"]["rg"]
    assert abs(data["rows"][0]["bound"] - rg / 2) <= 1e-3


def test_single_step_sweep_is_a_bound_run(tmp_path):
    assert main(["sweep", "--metric", "round 1", "--H-min", "1", "--H-max", "2",
                 "--H-steps", "1", "--out", str(tmp_path)]) == 0
    assert read_json(tmp_path / "bound.json")["bound"] == pytest.approx(0.375)


def test_path_and_collar_commands(tmp_path):
    assert main(["path", "--metric", "bump 2 0 0.05", "--n-times", "129",
                 "--out", str(tmp_path)]) == 0
    info = read_json(tmp_path / "path.json")
    assert info["admissible"]["ok"] and info["C_zeta"]["value"] > 0
    assert main(["collar", "--metric", "round 1", "--family", "theorem1", "--C", "0.3",
                 "--out", str(tmp_path)]) == 0
    col = read_json(tmp_path / "collar.json")
    assert col["extension"]["m_extension"] == pytest.approx(0.4604555 + 1e-3, abs=1e-6)
    # plain theorem1 above the large-H threshold fails hypothesis (4)
    assert main(["collar", "--metric", "round 1", "--H", "3", "--family", "theorem1",
                 "--C", "0.3", "--out", str(tmp_path)]) == 3


def test_verify_negative_control(tmp_path):
    assert main(["verify", "--lmax", "7", "--out", str(tmp_path)]) == 3
    rep = read_json(tmp_path / "verify.json")
    assert "refinement" in rep["failed"]


def test_verify_default_passes(tmp_path):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    rep = read_json(tmp_path / "verify.json")
    assert rep["passed"] and not rep["failed"]
    assert all(math.isfinite(s.get("worst_rel", 0.0)) for s in rep["suites"])
