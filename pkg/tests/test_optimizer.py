import time

import numpy as np
import pytest

from heatsched.core import DemandProfile, PumpConfig, Schedule, Tariff, evaluate_cost
from heatsched.optimizer import (
    InfeasibleDemand,
    ScheduleOptimizer,
    benchmark_cost,
    savings_report,
    simulate,
    solve,
    solve_batch,
    solve_bruteforce,
)

from conftest import random_instance

H4 = dict(horizon=4, terminal_mode="extended")


def outcome(fn, d, t, cfg):
    try:
        r = fn(d, t, cfg)
    except InfeasibleDemand as e:
        return ("infeasible", e.hour, e.direction)
    return ("optimal", r.schedule.to_string(), r.cost, r.perturbed_cost_key)


# --- simulate ---------------------------------------------------------------

def test_simulate_flat():
    traj = simulate(Schedule([0] * 24), DemandProfile([0] * 24), PumpConfig())
    assert traj.feasible
    assert np.all(traj.s == 100)
    assert len(traj.s) == 24  # S_0..S_23 under the default terminal mode


def test_simulate_hand_recurrence():
    traj = simulate(Schedule([0, 1, 0, 0]), DemandProfile([50] * 4), PumpConfig(**H4))
    assert traj.feasible
    np.testing.assert_allclose(traj.s, [100, 50, 160, 110, 60])


def test_simulate_overflow():
    bits = [1] + [0] * 23
    traj = simulate(Schedule(bits), DemandProfile([0] * 24), PumpConfig())
    assert traj.s[1] == pytest.approx(260)
    assert not traj.feasible
    assert (traj.first_violation, traj.direction) == (1, "overflow")


def test_default_mode_ignores_last_hour_demand():
    cfg = PumpConfig()
    hd = np.full(24, 4.0)
    hd[23] = 10_000
    traj = simulate(Schedule([0] * 24), DemandProfile(hd), cfg)
    assert traj.feasible
    cfg_ext = PumpConfig(terminal_mode="extended")
    assert not simulate(Schedule([0] * 24), DemandProfile(hd), cfg_ext).feasible


# --- solve ------------------------------------------------------------------

def test_zero_demand_all_off():
    for fn in (solve, solve_bruteforce):
        cfg = PumpConfig(horizon=12)
        r = fn(DemandProfile([0] * 12), Tariff.default(horizon=12), cfg)
        assert r.schedule == Schedule([0] * 12)
        assert r.cost == 0
    r = solve(DemandProfile([0] * 24), Tariff.default(), PumpConfig())
    assert r.cost == 0 and r.schedule == Schedule([0] * 24)


def test_worked_example_h4():
    d = DemandProfile([50] * 4)
    t = Tariff([1000, 1000, 2000, 2000])
    cfg = PumpConfig(**H4)
    # oracle by hand over all 16 schedules
    feasible = [(evaluate_cost(Schedule(b), t, cfg), b)
                for b in np.ndindex(2, 2, 2, 2)
                if simulate(Schedule(b), d, cfg).feasible]
    assert min(feasible)[1] == (0, 1, 0, 0)
    for fn in (solve, solve_bruteforce):
        r = fn(d, t, cfg)
        assert r.schedule.bits.tolist() == [0, 1, 0, 0]
        assert r.cost == 100
        np.testing.assert_allclose(r.trajectory.s, [100, 50, 160, 110, 60])


def test_infeasible_underflow_hour1():
    hd = [300] + [0] * 23
    for fn in (solve,):
        with pytest.raises(InfeasibleDemand) as e:
            fn(DemandProfile(hd), Tariff.default(), PumpConfig())
        assert (e.value.hour, e.value.direction) == (1, "underflow")
    with pytest.raises(InfeasibleDemand) as e:
        solve_bruteforce(DemandProfile(hd[:12]), Tariff.default(horizon=12), PumpConfig(horizon=12))
    assert (e.value.hour, e.value.direction) == (1, "underflow")


def test_bruteforce_refuses_large_horizon():
    with pytest.raises(ValueError):
        solve_bruteforce(DemandProfile([0] * 21), Tariff([1000] * 21), PumpConfig(horizon=21))


@pytest.mark.parametrize("mode", ["paper", "extended"], ids=["open_end", "closed_end"])
@pytest.mark.parametrize("H", [4, 8, 12, 16])
def test_oracle_equivalence(H, mode):
    rng = np.random.default_rng(1000 * H + (mode == "paper"))
    n_infeasible = 0
    for _ in range(250):
        hd, t, cfg = random_instance(rng, H, mode)
        d = DemandProfile(hd)
        a, b = outcome(solve, d, t, cfg), outcome(solve_bruteforce, d, t, cfg)
        assert a == b, (hd.tolist(), t.prices.tolist(), cfg)
        n_infeasible += a[0] == "infeasible"
    assert 0 < n_infeasible < 250


def test_tie_break_prefers_smallest_index_sum():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(300):
        H = int(rng.choice([6, 8, 10, 12]))
        hd, t, cfg = random_instance(rng, H, "extended")
        d = DemandProfile(hd)
        try:
            r = solve(d, t, cfg)
        except InfeasibleDemand:
            continue
        all_bits = np.array(list(np.ndindex(*(2,) * H)))
        feas = [b for b in all_bits if simulate(Schedule(b), d, cfg).feasible]
        costs = [evaluate_cost(Schedule(b), t, cfg) for b in feas]
        best = min(costs)
        optima = [b for b, c in zip(feas, costs) if c == best]
        index_sums = [int(np.flatnonzero(b).sum()) for b in optima]
        assert r.cost == best
        assert int(np.flatnonzero(r.schedule.bits).sum()) == min(index_sums)
        checked += len(optima) > 1
    assert checked > 20


def test_price_scaling_leaves_schedule_unchanged():
    rng = np.random.default_rng(3)
    for _ in range(200):
        hd, t, cfg = random_instance(rng, 12, "paper")
        d = DemandProfile(hd)
        scaled = Tariff(t.prices * int(rng.integers(2, 7)))
        try:
            a = solve(d, t, cfg)
        except InfeasibleDemand as e:
            with pytest.raises(InfeasibleDemand):
                solve(d, scaled, cfg)
            continue
        assert solve(d, scaled, cfg).schedule == a.schedule


def test_feasibility_certificate_and_cost(pipeline_100k):
    X, sol = pipeline_100k
    cfg, t = PumpConfig(), Tariff.default()
    for i in range(0, 100_000, 997):
        r = solve(DemandProfile(X[i]), t, cfg)
        assert r.trajectory.feasible
        assert r.cost == evaluate_cost(r.schedule, t, cfg)
        assert r.perturbed_cost_key == sol.key[i]


def test_default_mode_never_runs_last_hour(pipeline_100k):
    _, sol = pipeline_100k
    assert not np.any((sol.code[sol.feasible] >> 23) & 1)


def test_batch_matches_single_solves():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 60, (300, 24))
    sol = solve_batch(X, Tariff.default(), PumpConfig())
    for i in range(300):
        r = solve(DemandProfile(X[i]), Tariff.default(), PumpConfig())
        assert sol.code[i] == int(np.dot(r.schedule.bits, 1 << np.arange(24)))


def test_optimality_against_random_feasible_schedules(pipeline_100k):
    """Cost of the optimum never exceeds any feasible schedule found by sampling."""
    X, sol = pipeline_100k
    cfg, t = PumpConfig(), Tariff.default()
    rng = np.random.default_rng(17)
    prices = t.prices
    found_any = 0
    for i in rng.choice(len(X), 100, replace=False):
        need = X[i, :23].sum() / cfg.heat_per_step / 24
        bits = (rng.random((10_000, 24)) < np.clip(need, 0.02, 0.98)).astype(np.int64)
        k = np.cumsum(bits[:, :23], axis=1)
        S = cfg.s0 + cfg.heat_per_step * k - np.cumsum(X[i, :23])
        ok = np.all((S >= -1e-6) & (S <= 200 + 1e-6), axis=1)
        if ok.any():
            found_any += 1
            costs = cfg.p_max * (bits[ok] @ prices) / 1000
            assert sol.cost[i] <= costs.min() + 1e-9
    assert found_any > 50


def test_solve_performance(default_model):
    from heatsched.demand import sample_profiles
    X = sample_profiles(default_model, 100_000, seed=99)
    t0 = time.perf_counter()
    solve_batch(X, Tariff.default(), PumpConfig())
    assert time.perf_counter() - t0 < 10


# --- benchmark and savings ---------------------------------------------------

def test_benchmark_examples():
    t, cfg = Tariff.default(), PumpConfig()
    assert benchmark_cost(DemandProfile([0] * 24), t, cfg) == 0
    hd = np.zeros(24)
    hd[2] = 16
    assert benchmark_cost(DemandProfile(hd), t, cfg) == pytest.approx(10)
    # constant demand c: (24 c / cop) times the hour-weighted mean price
    c = 30.0
    mean_price = (8 * 1.0 + 16 * 1.5) / 24
    assert benchmark_cost(DemandProfile([c] * 24), t, cfg) == pytest.approx(24 * c / 1.6 * mean_price)


def test_savings_zero_demand_undefined():
    rep = savings_report([np.zeros(24)], Tariff.default(), PumpConfig())
    assert rep.optimal_cost[0] == 0 and rep.benchmark_cost[0] == 0
    assert np.isnan(rep.saving_pct[0])
    assert rep.n_undefined == 1


def test_savings_vt_only_day_bounded_by_price_ratio():
    hd = np.zeros(24)
    hd[8:16] = 20.0  # 160 kWh, all in VT hours
    rep = savings_report([hd], Tariff.default(), PumpConfig(s0=40))
    assert 0 < rep.saving_pct[0] <= 100 * (1 - 1 / 1.5) + 1e-9
    # one MT on-hour at t=0 fills storage to 200 exactly: 100 vs 160/1.6 * 1.5 = 150
    assert rep.saving_pct[0] == pytest.approx(100 * (150 - 100) / 150)
    # from S0=100 an MT hour would overflow, so the pump must run in VT
    rep = savings_report([hd], Tariff.default(), PumpConfig())
    assert rep.saving_pct[0] == pytest.approx(0)


def test_savings_excludes_infeasible():
    bad = np.zeros(24)
    bad[0] = 300
    rep = savings_report([bad, np.full(24, 20.0)], Tariff.default(), PumpConfig())
    assert rep.n_infeasible == 1
    assert np.isnan(rep.saving_pct[0]) and np.isfinite(rep.mean_saving_pct)


def test_mean_saving_positive(pipeline_100k):
    X, sol = pipeline_100k
    rep = savings_report(X[:10_000], Tariff.default(), PumpConfig())
    assert rep.mean_saving_pct > 0


# --- estimator surface --------------------------------------------------------

def test_schedule_optimizer_estimator():
    opt = ScheduleOptimizer(terminal_mode="extended", tariff=[1000, 1000, 2000, 2000])
    assert opt.get_params()["cop"] == 1.6
    assert opt.fit().predict([[50, 50, 50, 50]]).tolist() == [[0, 1, 0, 0]]
    with pytest.raises(InfeasibleDemand):
        ScheduleOptimizer().predict([[300] + [0] * 23])
