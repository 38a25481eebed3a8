import csv
import io
import json

import pytest

from cevlab.cli import main

PRICE_KEYS = {"alpha", "sigma", "t", "x", "payoff", "method", "value", "est_error", "singular_contribution", "converged", "truncation_series"}
MC_KEYS = {"quantity", "alpha", "sigma", "horizon", "x0", "seed", "n_steps", "scheme", "mean", "std_error", "absorbed_fraction", "n_capped", "n_paths"}
DEMO_HEADER = [
    "t [years]",
    "x [price]",
    "stationary U=x [price]",
    "convolution [price]",
    "fd far=payoff [price]",
    "fd far=convolution [price]",
    "mc mean [price]",
    "mc std_error [price]",
    "gap x-convolution [price]",
    "annotation",
]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_classify_alpha_two(capsys):
    code, out, _ = run(capsys, "classify", "--alpha", "2")
    recs = records(out)
    assert code == 0
    assert recs[0]["at_infinity"] == "ConditionRequired"
    lin = next(r for r in recs[1:] if r["growth"] == "Linear")
    assert lin["status"] == "Underdetermined"
    assert set(recs[0]) == {"record", "alpha", "at_zero", "at_infinity", "feller_c_process"}
    assert all(set(r) == {"record", "alpha", "growth", "status", "reason"} for r in recs[1:])


def test_classify_alpha_one_and_one_quarter(capsys):
    _, out, _ = run(capsys, "classify", "--alpha", "1")
    recs = records(out)
    assert recs[0]["at_zero"] != "ConditionRequired" and recs[0]["at_infinity"] == "NoCondition"
    assert next(r for r in recs[1:] if r["growth"] == "Linear")["status"] == "Unique"
    _, out, _ = run(capsys, "classify", "--alpha", "1.25")
    assert next(r for r in records(out)[1:] if r["growth"] == "Linear")["status"] == "NonUnique"


@pytest.mark.parametrize("argv", [["classify", "--alpha", "0"], ["classify"], ["price", "--alpha", "0.5", "--x", "-1"]])
def test_invalid_input_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_price_examples(capsys):
    code, out, _ = run(capsys, "price", "--alpha", "0.5", "--x", "1.7")
    rec = records(out)[0]
    assert code == 0 and set(rec) == PRICE_KEYS
    assert rec["value"] == pytest.approx(1.7, rel=1e-6)
    code, out, _ = run(capsys, "price", "--alpha", "2", "--sigma", "1", "--t", "1", "--x", "1")
    rec = records(out)[0]
    assert code == 0 and rec["value"] == pytest.approx(0.682690, abs=1e-6) and len(rec["truncation_series"]) == 8
    code, out, _ = run(capsys, "price", "--alpha", "3", "--x", "2", "--payoff", "constant", "--constant", "4")
    assert records(out)[0]["value"] == pytest.approx(4.0, abs=1e-8)


def test_price_alpha_one_uses_black_scholes(capsys):
    code, out, err = run(capsys, "price", "--alpha", "1", "--sigma", "0.2", "--x", "1", "--payoff", "call", "--strike", "1")
    rec = records(out)[0]
    assert code == 0 and "Black-Scholes" in err and rec["method"] == "black_scholes"
    assert rec["value"] == pytest.approx(0.079656, abs=1e-6)
    _, out, _ = run(capsys, "price", "--alpha", "1", "--sigma", "0.2", "--x", "1.3", "--payoff", "linear")
    assert records(out)[0]["value"] == pytest.approx(1.3, rel=1e-9)


def test_price_nonconvergence_exit_three(capsys):
    code, out, _ = run(capsys, "price", "--alpha", "1.25", "--x", "1")
    assert code == 3 and records(out)[0]["converged"] is False


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "sigma": 1.0, "t": 1.0, "x": 1.0, "payoff": "call", "strike": 1.0}))
    _, out, _ = run(capsys, "price", "--config", str(cfg))
    call = records(out)[0]["value"]
    _, out, _ = run(capsys, "price", "--config", str(cfg), "--payoff", "linear")
    assert records(out)[0]["value"] == pytest.approx(0.682690, abs=1e-6) and 0 < call < 0.68269
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "price", "--config", str(bad))[0] == 2


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "k.jsonl"
    run(capsys, "kernel-eval", "--alpha", "2", "--t", "1", "--y", "1", "--xi", "1", "--output", str(dest))
    rec = json.loads(dest.read_text())
    assert rec["value"] == pytest.approx(0.172476, abs=1e-6)


def test_kernel_eval_x_coordinates(capsys):
    _, out, _ = run(capsys, "kernel-eval", "--alpha", "2", "--sigma", "1", "--t", "1", "--x", "1", "--eta", "1")
    rec = records(out)[0]
    assert rec["coords"] == "x" and rec["value"] == pytest.approx(0.344952, abs=1e-6)


def test_exact_eval(capsys):
    _, out, _ = run(capsys, "exact-eval", "--kind", "bounded-alpha2", "--x", "1,2")
    recs = records(out)
    assert [r["x"] for r in recs] == [1.0, 2.0] and recs[0]["value"] == pytest.approx(0.682690, abs=1e-6)
    _, out, _ = run(capsys, "exact-eval", "--kind", "stationary", "--c1", "1", "--c2", "2", "--x", "0")
    assert records(out)[0]["value"] == 1.0


def test_fd_solve_csv(capsys):
    code, out, err = run(capsys, "fd-solve", "--alpha", "1", "--sigma", "0.2", "--payoff", "call", "--strike", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x [price]", "U(t=1) [price]"] and len(rows) == 401
    assert "far=DirichletPayoff" in err
    code, _, err = run(capsys, "fd-solve", "--alpha", "0.25", "--payoff", "linear", "--x-max", "4", "--n-points", "64")
    assert code == 0 and "alpha < 1/2" in err


def test_mc_record(capsys):
    argv = ["mc", "--alpha", "0.5", "--x0", "0.5", "--absorption", "--paths", "20000", "--steps", "100", "--seed", "4"]
    code, out, _ = run(capsys, *argv)
    rec = records(out)[0]
    assert code == 0 and set(rec) == MC_KEYS | {"closed_form"}
    _, again, _ = run(capsys, *argv)
    assert again == out


def test_demo_alpha_two(capsys):
    code, out, _ = run(capsys, "demo-nonuniqueness", "--alpha", "2", "--x", "1", "--paths", "20000", "--steps", "200")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == DEMO_HEADER
    row = dict(zip(DEMO_HEADER, rows[1]))
    assert float(row["stationary U=x [price]"]) == 1.0
    assert float(row["convolution [price]"]) == pytest.approx(0.6827, abs=1e-4)
    assert float(row["gap x-convolution [price]"]) == pytest.approx(0.3173, abs=1e-4)
    assert float(row["fd far=payoff [price]"]) == pytest.approx(1.0, abs=1e-9)
    assert float(row["fd far=convolution [price]"]) == pytest.approx(0.6827, rel=2e-3)
    assert row["annotation"] == "missing far-field condition"


def test_demo_alpha_one_and_a_quarter(capsys):
    code, out, _ = run(capsys, "demo-nonuniqueness", "--alpha", "1.25", "--x", "1,10,100", "--x-max", "400", "--paths", "10000", "--steps", "100")
    rows = list(csv.DictReader(io.StringIO(out)))
    conv = [float(r["convolution [price]"]) for r in rows]
    xs = [float(r["x [price]"]) for r in rows]
    assert all(c < x for c, x in zip(conv, xs))
    ratios = [c / x for c, x in zip(conv, xs)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert {r["annotation"] for r in rows} == {"outside uniqueness class"}


def test_demo_refuses_unique_regime(capsys):
    code, _, err = run(capsys, "demo-nonuniqueness", "--alpha", "1")
    assert code == 2 and "unique" in err


def test_verify_filter_and_perturbed_tolerance(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "kernel")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2 and all(l.startswith("PASS") for l in lines)
    code, out, _ = run(capsys, "verify", "--filter", "kernel", "--tolerance-scale", "1e-20")
    assert code == 1 and "FAIL" in out
    assert run(capsys, "verify", "--filter", "nothing")[0] == 2
