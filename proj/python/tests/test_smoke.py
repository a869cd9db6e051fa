import json
import math
import random

import pytest

import roacert


def test_builtin_systems_listed():
    names = roacert.systems()
    assert "vanderpol_reverse" in names
    assert "quartic_interaction" in names
    assert "x1 + (x1^2 - 1)*x2" in roacert.system_config("vanderpol_reverse")


def test_expression_eval_and_derivative():
    names = ["x1", "x2"]
    assert roacert.eval_expr("x1 + (x1^2 - 1)*x2", names, [1.0, 1.0]) == pytest.approx(1.0)
    d = roacert.differentiate("x1 + (x1^2 - 1)*x2", names, 1)
    for _ in range(20):
        x = [random.uniform(-2, 2), random.uniform(-2, 2)]
        assert roacert.eval_expr(d, names, x) == pytest.approx(x[0] ** 2 - 1, abs=1e-12)
    lo, hi = roacert.eval_expr_interval("x1^2", ["x1"], [(-1.0, 1.0)])
    assert lo == 0.0 and hi >= 1.0 and hi < 1.0 + 1e-12


def test_parse_error_reports_offset():
    with pytest.raises(roacert.ParseError, match="offset 5"):
        roacert.eval_expr("x1 + * x2", ["x1", "x2"], [0.0, 0.0])


def test_lyapunov_solve():
    p = roacert.solve_lyapunov([[-1.0, 0.0], [0.0, -1.0]], [[1.0, 0.0], [0.0, 1.0]])
    assert p[0][0] == pytest.approx(0.5) and p[1][1] == pytest.approx(0.5)
    assert abs(p[0][1]) < 1e-14
    with pytest.raises(roacert.LinalgError):
        roacert.solve_lyapunov([[0.0, 1.0], [-1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])


def test_membership_matches_definition():
    rng = random.Random(3)
    v = [rng.random() for _ in range(40)]
    vd = [rng.uniform(-1, 0.2) for _ in range(40)]
    mask = roacert.membership_hard(v, vd, 1e-3)
    for i in range(40):
        expected = not any(v[j] <= v[i] and vd[j] > -1e-3 for j in range(40))
        assert mask[i] == expected


def test_tiny_train_and_verify():
    res = roacert.train("vanderpol_reverse", hidden=8, epochs=5, grid=10, seed=1)
    assert len(res["log"]) == 6
    assert res["best_cardinality"] >= res["log"][0]["hard_cardinality"]
    model = roacert.Model.from_json(res["model_json"])
    assert model.kind == "neural"
    assert model.V([0.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert model.V([0.3, -0.2]) > 0.0
    out = model.verify(workers=2)
    assert out["certified"] <= out["members"]
    assert out["eps_used"] <= 1e-4
    summary = json.loads(out["summary_json"])
    assert summary["certified"] == out["certified"]
    assert out["report_csv"].startswith("grid_index,x1,x2,V,Vdot,member_before,status,pruned_by_level,certified")


def test_quadratic_baseline_verifies():
    res = roacert.train_baseline("vanderpol_reverse", optimize=False, grid=20)
    model = roacert.Model.from_json(res["model_json"])
    assert model.kind == "quadratic"
    out = model.verify()
    assert out["certified"] > 0


def test_cli_usage_and_systems(tmp_path):
    code, out, err = roacert.cli(["systems"])
    assert code == 0 and "vanderpol_reverse" in out
    code, out, err = roacert.cli(["train"])
    assert code == 2
    code, out, err = roacert.cli(["--out-dir", str(tmp_path), "train", "--system", "vanderpol_reverse",
                                  "--hidden", "4", "--grid", "8", "--epochs", "2"])
    assert code == 0, err
    model = roacert.load_model(str(tmp_path / "vanderpol_reverse_seed0.model"))
    assert math.isfinite(model.alpha)
