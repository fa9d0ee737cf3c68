import json
import math
import os
from pathlib import Path

import pytest

import growthopt as go

DATA = Path(os.environ.get("GROWTHOPT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def bundled():
    return go.load_model(str(DATA / "two_asset.json"))


def small_grid():
    g = go.GridSpec()
    g.simplex_order = 4
    g.x_min = 0.01
    g.x_max = 1000.0
    g.n_x = 6
    return g


def test_load_and_validate(bundled):
    model, costs = bundled
    assert model.n_assets == 2
    assert model.n_factors == 2
    report = go.validate(model)
    assert report["ok"]
    theta = go.invariant_measure(model)
    assert theta == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    assert go.p_hat(model) > 0.0
    assert len(go.model_hash(model, costs)) == 16


def test_solve_e_hand_example():
    spec = go.CostSpec.uniform(2, 0.01, 1.0)
    e = go.solve_e(spec, [1.0, 0.0], [0.0, 1.0], 100.0)
    assert e == pytest.approx(0.98 / 1.01, abs=1e-15)
    assert go.solve_e(spec, [1.0, 0.0], [0.0, 1.0], 0.5) == 0.0
    assert go.solve_e_bisect(spec, [1.0, 0.0], [0.0, 1.0], 100.0) == pytest.approx(e, abs=1e-12)


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        go.MarketModel(2, [1.0], [1.0], [1.0])


def test_vanishing_discount_and_simulation(bundled):
    model, costs = bundled
    res = go.vanishing_discount(model, costs, small_grid(), [0.9, 0.99])
    assert math.isfinite(res["lambda"])
    assert res["prop_policy"].wealth_free()
    est = go.average_growth(model, costs, res["policy"], "grid", [1.0, 0.0], 10.0, 0, 500, 20, 3)
    assert abs(est.mean - res["lambda"]) < 0.02
    again = go.average_growth(model, costs, res["policy"], "grid", [1.0, 0.0], 10.0, 0, 500, 20, 3)
    assert again.per_path == est.per_path


def test_run_command_validate(tmp_path):
    code, report, log = go.run_command("validate", str(DATA / "example_config.json"), output_dir=str(tmp_path))
    assert code == 0, log
    assert json.loads(report)["assumptions"]["A6_cost_below_floor"]
    assert (tmp_path / "manifest_validate.json").exists()


def test_run_command_usage_error(tmp_path):
    code, _, _ = go.run_command("validate", str(tmp_path / "missing.json"))
    assert code == 2
