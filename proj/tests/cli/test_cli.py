import copy
import csv
import itertools
import json
import math
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("PGRTB_CLI", "pgrtb")
CONFIGS = Path(os.environ.get("PGRTB_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], cwd=cwd, capture_output=True, text=True, timeout=600)


def load(name):
    return json.loads((CONFIGS / name).read_text())


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def small_market():
    return {
        "schema_version": 1,
        "market": {
            "supply_S": 3,
            "demand_Q": 7,
            "horizon_T": 2.0,
            "steps_N": 2,
            "arrival_rate_lambda": 1.3,
            "initial_arrival_mass": 0.1,
            "price_effect_alpha": 1.5,
            "time_effect_beta": 0.2,
            "risk_level_zeta": 0.8,
            "risk_decay_v": 0.3,
            "miss_prob_omega": 0.1,
            "penalty_size_varpi": 0.5,
            "max_value_pi": 1.0,
            "reserve_price_r0": 0.0,
        },
        "bid_model": {"kind": "uniform", "lo": 0.0, "hi": 1.0},
        "seed": 5,
    }


def uniform_phi(xi):
    return 1.0 if math.isinf(xi) else (xi - 1.0) / (xi + 1.0)


def uniform_psi(xi):
    return 0.0 if math.isinf(xi) else math.sqrt(2.0 * (xi - 1.0) / ((xi + 1.0) ** 2 * (xi + 2.0)))


def brute_force(m):
    S, Q, N, T = m["supply_S"], m["demand_Q"], m["steps_N"], m["horizon_T"]
    dt = T / N
    acc, arrivals = 0.0, []
    for n in range(N + 1):
        acc += m["arrival_rate_lambda"] * dt + (m["initial_arrival_mass"] * Q if n == 0 else 0.0)
        arrivals.append(acc)
    caps = [min(S, math.floor(a)) for a in arrivals]
    keep = 1.0 - m["miss_prob_omega"] * m["penalty_size_varpi"]

    def xi_of(y):
        return math.inf if y == S else (Q - y) / (S - y)

    def bound(n, y):
        xi = xi_of(y)
        if xi <= 1.0:
            return m["reserve_price_r0"]
        t = T * n / N
        delta = m["risk_level_zeta"] * math.exp(-m["risk_decay_v"] * t)
        phi = uniform_phi(xi) if xi >= 2.0 else m["reserve_price_r0"]
        psi = uniform_psi(xi) if xi >= 2.0 else 0.0
        return min(phi + delta * psi, m["max_value_pi"])

    best = (-math.inf, None)
    for path in itertools.product(*(range(c + 1) for c in caps)):
        if any(b < a for a, b in zip(path, path[1:])):
            continue
        value, before, ok = 0.0, 0, True
        for n, y in enumerate(path):
            sell = y - before
            if sell > 0:
                k = m["price_effect_alpha"] * (1.0 + m["time_effect_beta"] * (T - T * n / N))
                price = -(math.log(sell) - math.log(arrivals[n] - before)) / k
                if price > bound(n, y):
                    ok = False
                    break
                value += keep * price * sell
            before = y
        if not ok:
            continue
        y = path[-1]
        xi = xi_of(y)
        if y < S:
            value += (S - y) * (uniform_phi(xi) if xi >= 2.0 else m["reserve_price_r0"])
        if value > best[0]:
            best = (value, path)
    return best


def test_gen_data_is_deterministic(tmp_path):
    cfg = CONFIGS / "uniform_log.json"
    assert run("--config", cfg, "--out", tmp_path / "a", "gen-data").returncode == 0
    assert run("--config", cfg, "--out", tmp_path / "b", "gen-data").returncode == 0
    for name in ("auctions.csv", "auctions.truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    truth = json.loads((tmp_path / "a" / "auctions.truth.json").read_text())
    with open(tmp_path / "a" / "auctions.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == truth["rows"]
    assert len({r["auction_id"] for r in rows}) == truth["auctions"]


def test_gen_data_seed_override_changes_log(tmp_path):
    cfg = CONFIGS / "uniform_log.json"
    run("--config", cfg, "--out", tmp_path / "a", "gen-data")
    run("--config", cfg, "--seed", 99, "--out", tmp_path / "b", "gen-data")
    assert (tmp_path / "a" / "auctions.csv").read_bytes() != (tmp_path / "b" / "auctions.csv").read_bytes()


def test_gen_data_zero_hours_writes_header_only(tmp_path):
    cfg = load("uniform_log.json")
    cfg["gen_data"]["hours"] = 0
    path = write_config(tmp_path, cfg)
    assert run("--config", path, "--out", tmp_path / "g", "gen-data").returncode == 0
    lines = (tmp_path / "g" / "auctions.csv").read_text().splitlines()
    assert lines == ["slot_id,auction_id,timestamp,bid_cpm"]


def test_fit_recovers_uniform_phi(tmp_path):
    cfg = CONFIGS / "uniform_log.json"
    run("--config", cfg, "--out", tmp_path, "gen-data")
    res = run("--config", cfg, "--out", tmp_path, "fit", "--log", tmp_path / "auctions.csv")
    assert res.returncode == 0, res.stderr
    model = json.loads((tmp_path / "fitted_model.json").read_text())
    knots = {x: y for x, y in model["phi"]["knots"]}
    assert abs(knots[3.0] - 0.5) <= 0.05


def test_fit_on_empty_log_fails_with_input_error(tmp_path):
    log = tmp_path / "empty.csv"
    log.write_text("slot_id,auction_id,timestamp,bid_cpm\n")
    res = run("--config", CONFIGS / "uniform_log.json", "--out", tmp_path, "fit", "--log", log)
    assert res.returncode == 2
    assert "no rows" in res.stderr


def test_optimize_without_arrivals_sells_nothing(tmp_path):
    cfg = load("reference.json")
    cfg["market"]["arrival_rate_lambda"] = 0.0
    cfg["market"]["initial_arrival_mass"] = 0.0
    res = run("--config", write_config(tmp_path, cfg), "--out", tmp_path, "optimize")
    assert res.returncode == 0, res.stderr
    plan = json.loads((tmp_path / "plan.json").read_text())
    assert plan["gamma"] == 0.0
    assert plan["total_sold"] == 0


def test_optimize_revenue_splits_into_channels(tmp_path):
    res = run("--config", CONFIGS / "reference.json", "--out", tmp_path, "optimize")
    assert res.returncode == 0, res.stderr
    plan = json.loads((tmp_path / "plan.json").read_text())
    assert plan["revenue_total"] == pytest.approx(plan["revenue_pg"] + plan["revenue_rtb"], rel=1e-12)
    assert sum(s["sold"] for s in plan["steps"]) == plan["total_sold"] <= plan["supply"]
    for s in plan["steps"]:
        if s["sale"]:
            assert 0.0 <= s["price"] <= s["bound"]
    with open(tmp_path / "plan_curves.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == len(plan["steps"])


def test_optimize_matches_exhaustive_search(tmp_path):
    cfg = small_market()
    res = run("--config", write_config(tmp_path, cfg), "--out", tmp_path, "optimize")
    assert res.returncode == 0, res.stderr
    plan = json.loads((tmp_path / "plan.json").read_text())
    value, path = brute_force(cfg["market"])
    assert plan["revenue_total"] == pytest.approx(value, rel=1e-9)
    assert [s["cumulative"] for s in plan["steps"]] == list(path)


def test_replan_without_noise_reproduces_optimize(tmp_path):
    cfg = CONFIGS / "reference.json"
    run("--config", cfg, "--out", tmp_path / "o", "optimize")
    res = run("--config", cfg, "--out", tmp_path / "r", "replan")
    assert res.returncode == 0, res.stderr
    static = json.loads((tmp_path / "o" / "plan.json").read_text())
    replanned = json.loads((tmp_path / "r" / "replan_plan.json").read_text())
    assert replanned["revenue_total"] == static["revenue_total"]
    assert [(s["price"], s["sold"]) for s in replanned["steps"]] == [(s["price"], s["sold"]) for s in static["steps"]]


def test_replan_with_noise_is_reproducible(tmp_path):
    cfg = load("reference.json")
    cfg["uncertainty"]["epsilon"] = 0.1
    path = write_config(tmp_path, cfg)
    run("--config", path, "--out", tmp_path / "a", "replan")
    run("--config", path, "--threads", 1, "--out", tmp_path / "b", "replan")
    assert (tmp_path / "a" / "replan.json").read_bytes() == (tmp_path / "b" / "replan.json").read_bytes()


def test_simulate_is_reproducible(tmp_path):
    cfg = CONFIGS / "reference.json"
    run("--config", cfg, "--out", tmp_path / "a", "simulate", "--runs", 40)
    run("--config", cfg, "--threads", 1, "--out", tmp_path / "b", "simulate", "--runs", 40)
    a = (tmp_path / "a" / "simulation.json").read_bytes()
    assert a == (tmp_path / "b" / "simulation.json").read_bytes()
    summary = json.loads(a)
    assert summary["runs"] == 40
    assert summary["mean_total"] == pytest.approx(summary["plan_revenue_total"], rel=0.05)


def test_simulate_reads_a_saved_plan(tmp_path):
    cfg = CONFIGS / "reference.json"
    run("--config", cfg, "--out", tmp_path, "optimize")
    res = run("--config", cfg, "--out", tmp_path, "simulate", "--plan", tmp_path / "plan.json", "--runs", 10)
    assert res.returncode == 0, res.stderr


def test_segment_produces_two_plans(tmp_path):
    cfg = CONFIGS / "two_population.json"
    run("--config", cfg, "--out", tmp_path, "gen-data")
    res = run("--config", cfg, "--out", tmp_path, "segment", "--log", tmp_path / "auctions.csv")
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "segments.json").read_text())
    assert not report["fallback"]
    assert len(report["segments"]) == 2


def test_missing_config_exits_2(tmp_path):
    assert run("--config", tmp_path / "nope.json", "--out", tmp_path, "optimize").returncode == 2
    assert run("optimize").returncode == 2


def test_missing_log_exits_2(tmp_path):
    res = run("--config", CONFIGS / "uniform_log.json", "--out", tmp_path, "fit", "--log", tmp_path / "nope.csv")
    assert res.returncode == 2


def test_unknown_key_exits_2(tmp_path):
    cfg = copy.deepcopy(small_market())
    cfg["market"]["supply"] = 3
    res = run("--config", write_config(tmp_path, cfg), "--out", tmp_path, "optimize")
    assert res.returncode == 2
    assert "unknown key" in res.stderr


def test_invalid_market_exits_2(tmp_path):
    cfg = small_market()
    cfg["market"]["demand_Q"] = 2
    assert run("--config", write_config(tmp_path, cfg), "--out", tmp_path, "optimize").returncode == 2
