from __future__ import annotations

import json

import pytest

from colombeau.cli import main

HH = json.dumps({"type": "power", "k": 2, "child": {"type": "heaviside"}})
H = json.dumps({"type": "heaviside"})


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_mollifier_build(capsys):
    code, out, _ = run(capsys, "mollifier", "build", "--q", "2")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == 1 and rep["command"] == "mollifier build"
    assert rep["result"]["within_tolerance"]
    assert rep["config"]["q"] == 2


def test_mollifier_check_from_file(capsys, tmp_path):
    run(capsys, "mollifier", "build", "--q", "4", "--output", str(tmp_path / "m.json"))
    code, out, _ = run(capsys, "mollifier", "check", "--mollifier", str(tmp_path / "m.json"))
    assert code == 0 and json.loads(out)["result"]["mollifier"]["q"] == 4


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", "--expr", json.dumps({"type": "delta"}), "--eps", "0.01", "--x", "0", "1")
    vals = json.loads(out)["result"]["values"]
    assert code == 0 and vals[1] == 0.0 and vals[0] > 100


def test_pair_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "pair", "--expr", H, "--test", "0,1", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "epsilon,value,err" and len(lines) == 9


def test_associate(capsys):
    code, out, _ = run(capsys, "associate", "--expr", HH, "--expr2", H)
    assert code == 0 and json.loads(out)["result"]["associated"] is True


def test_classify_and_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"count": 6, "q": 0}))
    dd = json.dumps({"type": "product", "factors": [{"type": "delta"}, {"type": "delta"}]})
    code, out, _ = run(capsys, "classify", "--expr", dd, "--config", str(cfg))
    rep = json.loads(out)
    assert code == 0 and rep["result"]["N"] == pytest.approx(2.0)
    assert rep["config"]["count"] == 6 and rep["config"]["q"] == 0


def test_verify_ups(capsys):
    code, out, _ = run(capsys, "verify-ups", "--a", "0.1", "--eps", "1e-3")
    assert code == 0 and json.loads(out)["result"]["passed"]


def test_demo_self_energy(capsys, tmp_path):
    csv_path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "demo", "self-energy", "--a", "0.1", "--eps", "1e-3", "--csv", str(csv_path))
    res = json.loads(out)["result"]
    assert code == 0 and res["value"] == pytest.approx(res["expected"], rel=1e-2)
    assert csv_path.read_text().startswith("epsilon,value,err")


def test_demo_burgers(capsys):
    code, out, _ = run(capsys, "demo", "burgers", "--u1", "0", "--u2", "1")
    assert code == 0 and json.loads(out)["result"]["c"] == pytest.approx(0.5, abs=1e-3)


def test_demo_alpha_and_coulomb(capsys):
    code, out, _ = run(capsys, "demo", "alpha")
    assert code == 0 and json.loads(out)["result"]["alpha"] == pytest.approx(0.5, abs=1e-6)
    code, out, _ = run(capsys, "demo", "coulomb", "--a", "0.1", "--eps", "1e-3")
    assert code == 0 and json.loads(out)["result"]["field_shadow"] == "Heaviside(x)/x**2"


def test_reports_are_deterministic(capsys):
    _, a, _ = run(capsys, "pair", "--expr", HH)
    _, b, _ = run(capsys, "pair", "--expr", HH)
    assert a == b


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["pair", "--expr", "not json"],
    ["demo", "coulomb", "--a", "0.1", "--eps", "0.1"],
    ["demo", "burgers", "--u1", "1", "--u2", "1"],
    ["pair", "--expr", H, "--test", "oops"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_numeric_failure_exits_3_with_diagnostic(capsys):
    f = "x**3*exp(-x**2)"
    expr = json.dumps({"type": "sum", "terms": [
        {"type": "conv_embed", "f": f},
        {"type": "scale", "factor": -1, "child": {"type": "smooth", "expr": f}}]})
    code, out, err = run(capsys, "classify", "--mode", "negligible", "--q", "4", "--expr", expr,
                         "--probe", "-1", "0.5", "1")
    assert code == 3
    diag = json.loads(out)
    assert diag["error"]["type"] == "PoorFit" and "residual" in diag["error"]["details"]
