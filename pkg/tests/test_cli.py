import csv
import io
import json
import math

import pytest

from fivepoint import cli
from fivepoint.formulas import constants
from fivepoint.reports import DEFAULT_SEED, fmt


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_constants(capsys):
    code, out, err = run(capsys, "eval", "constants")
    assert code == 0
    rows = {r["name"]: r for r in table(out)}
    for name in ("K3", "K4", "K5", "KF"):
        assert rows[name]["formula"]
    assert float(rows["KF"]["value"]) == constants().KF
    # a manifest line echoing the resolved configuration goes to stderr
    man = json.loads(err.strip().splitlines()[-1])
    assert man["config"]["seed"] == DEFAULT_SEED


def test_eval_G_far_end(capsys):
    code, out, _ = run(capsys, "eval", "G", "--x", "10", "--y", "0.5")
    assert code == 0
    assert abs(float(table(out)[0]["value"]) - 2 ** (1 / 3)) < 1e-8


def test_eval_factcheck(capsys):
    code, out, _ = run(capsys, "eval", "factcheck", "--u1", "0", "--u3", "2", "--w", "1+1.5i")
    assert code == 0
    rows = {r["name"]: float(r["value"]) for r in table(out)}
    assert rows["relative_difference"] < 1e-10


def test_eval_F5_prints_strip_coordinates(capsys):
    code, out, _ = run(capsys, "eval", "F5", "--u1", "0", "--u2", "1", "--u3", "3", "--w", "2+1.5j")
    assert code == 0
    row = table(out)[0]
    assert set(row) == {"name", "value", "x", "y", "deriv_mod"}


@pytest.mark.parametrize("argv", [
    ["eval", "C3", "--u1", "0", "--u2", "2", "--u3", "1"],   # invalid geometry
    ["eval", "P3", "--u1", "0", "--w", "1-1i"],
    ["eval", "C3", "--u1", "0"],                             # missing arguments
    ["eval", "nothing"],
    ["eval", "G", "--x", "abc", "--y", "0.5"],
    ["sle", "drift-kappa", "--kappa", "4"],
    ["verify", "--checks", "unknown-check"],
    ["verify", "--grid", "100"],
])
def test_usage_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert "error" in err


def test_no_command_is_usage_error(capsys):
    assert run(capsys)[0] == 1


def test_verify_default_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] is True
    assert {r["check_name"] for r in doc["reports"]} == {"cardy-pde", "fc-pde", "f-pde", "radial-pde", "eigen"}
    for r in doc["reports"]:
        assert r["max_residual"] <= r["tolerance"]


@pytest.mark.parametrize("arrow", ["11/96->10/96", "11/96→10/96"])
def test_verify_negative_control(capsys, arrow):
    code, _, err = run(capsys, "verify", "--perturb", arrow)
    assert code == 2
    assert "fc-pde" in err


def test_verify_eigen_on_two_grids(capsys):
    code, out, _ = run(capsys, "verify", "--checks", "eigen", "--grid", "200", "--grid", "400")
    assert code == 0
    (rep,) = json.loads(out)["reports"]
    assert rep["max_residual"] < 1e-4


def test_verify_tolerance_override_fails(capsys):
    code, _, err = run(capsys, "verify", "--checks", "cardy-pde", "--tol", "cardy-pde=1e-12")
    assert code == 2 and "cardy-pde" in err


def test_sle_drift_kappa(capsys):
    code, out, _ = run(capsys, "sle", "drift-kappa", "--kappa", "6")
    assert code == 0
    assert abs(float(table(out)[0]["difference"])) < 1e-8


def test_sle_martingale_columns_and_thread_determinism(capsys):
    args = ["sle", "martingale-h", "--n", "400", "--t", "0.01,0.02", "--seed", "4"]
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args, "--threads", "3")
    assert out1 == out2
    rows = table(out1)
    assert list(rows[0])[:8] == ["check", "t", "n_alive", "mean", "stderr", "dt", "eps", "seed"]
    assert code1 == code2 == (0 if all(r["within_3sigma"] == "true" for r in rows) else 2)


def test_sle_negative_control_detected(capsys):
    code, out, _ = run(capsys, "sle", "martingale-h", "--n", "3000", "--t", "0.05,0.1",
                       "--g-exponent", "10/96")
    assert code == 2


def test_perc_crossing_and_outputs(capsys, tmp_path):
    out_file = tmp_path / "res" / "crossing.csv"
    args = ["perc", "crossing", "--L", "32", "--n", "3000", "--out", str(out_file)]
    code, out, _ = run(capsys, *args)
    assert code == 0
    assert out_file.read_text() == out
    manifest = json.loads((tmp_path / "res" / "run.json").read_text())
    assert manifest["command"] == "perc"
    assert manifest["config"]["params"]["region"]["geometry"] == "rhombus"
    assert manifest["outputs"] == ["crossing.csv"]
    row = table(out)[0]
    assert list(row) == ["event", "L", "epsilon", "n", "hits", "p_hat", "stderr", "seed"]
    _, out2, _ = run(capsys, *args[:-2], "--threads", "2")
    assert out2 == out


def test_perc_factorize_small(capsys):
    code, out, _ = run(capsys, "perc", "factorize", "--L", "64", "--n", "300", "--eps", "1/8",
                       "--w2", "0.4+0.3i")
    rows = table(out)
    assert sum(r["event"].startswith("ratio[") for r in rows) == 2
    assert code in (0, 2)


def test_config_file_and_seed_env(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nL = 16\nn = 500\n")
    code, out, _ = run(capsys, "--config", str(cfg), "perc", "crossing")
    assert code in (0, 2)
    row = table(out)[0]
    assert row["L"] == "16" and row["n"] == "500" and row["seed"] == str(DEFAULT_SEED)
    monkeypatch.setenv("FIVEPOINT_SEED", "77")
    _, out, _ = run(capsys, "--config", str(cfg), "perc", "crossing", "--n", "200")
    row = table(out)[0]
    assert row["seed"] == "77" and row["n"] == "200"
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "--config", str(cfg), "perc", "crossing")[0] == 1


def test_argument_types():
    assert cli.number("1/32") == 1 / 32
    assert cli.point("1+1.5i") == complex(1, 1.5)
    assert cli.perturbation("11/96→10/96") == (11 / 96, 10 / 96)


def test_full_precision_formatting():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(True) == "true" and fmt(None) == "" and fmt(math.inf) == "inf"
