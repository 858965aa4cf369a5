import json
import math

import pytest

from bardina import cli, verify
from bardina.dynamics import read_checkpoint
from bardina.report import ReportDocument
from bardina.serialize import read_csv


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path), "--quick"])


def report(tmp_path, name):
    return ReportDocument.read(tmp_path / f"{name}.json")


def test_simulate(tmp_path):
    assert run(tmp_path, "simulate", "--M", "8", "--seed", "5") == 0
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header[:4] == ["t", "energy_alpha", "grad_norm", "forcing_work"]
    assert len(rows) == 3
    t, state, p = read_checkpoint(tmp_path / "checkpoint.json")
    assert t == pytest.approx(0.02) and state.lattice.M == 8 and p.alpha == 1 / 64
    pl = report(tmp_path, "simulate").payload
    assert pl["dissipative_bound_holds"] and pl["vorticity_estimate_holds"]
    assert (tmp_path / "effective.cfg").read_text().startswith("seed = 5")


def test_simulate_blowup_exits_numeric(tmp_path, capsys):
    code = run(tmp_path, "simulate", "--M", "8", "--dt", "5", "--T", "100", "--init-scale", "50", "--lam", "1e4")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "numeric"


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "count", "--delta", "0.6") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and any(v.startswith("delta") for v in err["violations"])
    assert run(tmp_path, "count", "--config", str(tmp_path / "missing.cfg")) == 2
    assert cli.main(["no-such-command"]) == 2


def test_stability_eigen_and_scan(tmp_path):
    assert run(tmp_path, "stability-eigen", "--lam", "40", "--t-prime", "4") == 0
    pl = report(tmp_path, "stability_eigen").payload
    assert pl["unstable"] and pl["lambda_star"] == pytest.approx(1.5539882648, rel=1e-8)
    assert run(tmp_path, "stability-scan") == 0
    header, rows = read_csv(tmp_path / "instability_scan.csv")
    assert header == ["s", "t_prime", "r", "lambda_star", "c1_hat"]
    assert rows and all(float(r[3]) > 0 for r in rows)
    assert read_csv(tmp_path / "region_scan.csv")[0] == ["t_prime", "r", "in_A", "in_D"]


def test_lift(tmp_path):
    assert run(tmp_path, "lift", "--a", "4", "--b", "2", "--r", "1", "--lam", "40") == 0
    pl = report(tmp_path, "lift").payload
    assert pl["a_hat"] == pytest.approx(math.sqrt(20))
    assert pl["residual"] < 1e-8 and pl["divergence"] < 1e-10


def test_count(tmp_path):
    assert run(tmp_path, "count") == 0
    header, rows = read_csv(tmp_path / "counting.csv")
    assert header == ["s", "count", "count_over_s3", "c5"]
    assert [int(r[0]) for r in rows] == [100, 200]


def test_bounds_closed_form(tmp_path):
    assert run(tmp_path, "bounds", "--alpha", "1", "--gamma", "1", "--g-norm-sq", "12pi") == 0
    pl = report(tmp_path, "bounds").payload
    assert pl["upper_3d"] == pytest.approx(1.0, rel=1e-15)
    assert pl["n_star"] >= 1


def test_bounds_measured(tmp_path):
    assert run(tmp_path, "bounds", "--c1", "6.275554318484645", "--s-list", "8,16") == 0
    pl = report(tmp_path, "bounds").payload
    assert pl["upper_slope"] == pytest.approx(-1.5, abs=1e-12)
    assert all(r["ratio"] >= 1 for r in pl["reports"])
    assert (tmp_path / "lower_bound.json").exists()


def test_sums(tmp_path):
    assert run(tmp_path, "sums") == 0
    header, rows = read_csv(tmp_path / "lattice_sums.csv")
    anchor = [r for r in rows if float(r[0]) == 1.0]
    assert len(anchor) == 1 and float(anchor[0][1]) == pytest.approx(8.998505477966614, abs=1e-12)
    assert all(float(r[4]) > 0 for r in rows)


def test_payload_survives_parse_cycle(tmp_path):
    # -0.0 and integral floats used to come back as ints and change the digest
    assert run(tmp_path, "lift", "--a", "4", "--b", "0", "--r", "0", "--lam", "40") == 0
    assert report(tmp_path, "lift").payload["b"] == 0


def test_verify_violation_exits_1(tmp_path, monkeypatch):
    monkeypatch.setattr(verify, "run_suite", lambda quick, seed: [verify.Check("forced", False, {})])
    assert run(tmp_path, "verify") == 1


def test_json_digits_and_digest(tmp_path):
    assert run(tmp_path, "sums") == 0
    raw = json.loads((tmp_path / "sums.json").read_text())
    assert raw["payload"]["F_at_1"] == pytest.approx(8.998505477966614, abs=1e-13)
    assert 0 < raw["payload"]["min_pi2_margin"] < math.pi**2
    doc = ReportDocument.from_dict(raw)
    raw["payload"]["F_at_1"] = 0.0
    with pytest.raises(ValueError):
        ReportDocument.from_dict(raw)
    assert doc.timestamp.endswith("Z")
