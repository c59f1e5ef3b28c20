import json
import os
from pathlib import Path

import pytest

import pgrtb

CONFIGS = Path(os.environ.get("PGRTB_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))

UNIFORM = {"kind": "uniform", "lo": 0.0, "hi": 1.0}


def test_uniform_second_price_closed_form():
    for xi in range(2, 11):
        phi, psi = pgrtb.second_price_moments(xi, UNIFORM)
        assert phi == pytest.approx((xi - 1) / (xi + 1), abs=1e-9)
        assert psi == pytest.approx((2 * (xi - 1) / ((xi + 1) ** 2 * (xi + 2))) ** 0.5, abs=1e-9)


def test_monte_carlo_agrees_with_quadrature():
    est = pgrtb.mc_second_price(4, UNIFORM, trials=200000, seed=3)
    assert abs(est["mean"] - 0.6) <= 4 * est["std_error"]


def test_reference_plan_from_path_and_dict_agree():
    path = CONFIGS / "reference.json"
    a = pgrtb.optimize(path)
    b = pgrtb.optimize(json.loads(path.read_text()), threads=1)
    assert a == b
    assert a["revenue_total"] == pytest.approx(a["revenue_pg"] + a["revenue_rtb"])
    assert sum(s["sold"] for s in a["steps"]) == a["total_sold"] <= a["supply"]


def test_replan_without_noise_matches_optimize():
    path = CONFIGS / "reference.json"
    assert pgrtb.replan(path)["plan"]["revenue_total"] == pgrtb.optimize(path)["revenue_total"]


def test_simulate_runs():
    summary = pgrtb.simulate(CONFIGS / "reference.json", runs=20)
    assert summary["runs"] == 20
    assert summary["mean_total"] > 0


def test_bad_config_raises():
    cfg = json.loads((CONFIGS / "reference.json").read_text())
    cfg["market"]["demand_Q"] = 1
    with pytest.raises(ValueError):
        pgrtb.optimize(cfg)
