"""Exact cost-minimal on/off scheduling of a heat pump with storage.

With a single power level and a constant COP the stored heat before hour
``t`` is ``s0 + cop * p_max * k - sum(hd[:t])`` where ``k`` is the number of
on-hours so far. The state space is therefore the pair ``(t, k)`` and the
problem is solved exactly by a forward dynamic program over at most
``H * (H + 1) / 2 + H`` states. The DP is vectorised over many profiles.

Ties in cost are broken deterministically through the integer key
``sum_t (price_t * 10**6 + t) * bits[t]``, which favours switching on earlier
in the day, and then by the smaller integer encoding of the schedule.
Base-cost differences are multiples of ``10**6`` in key units while the
hour-index term is at most ``sum(range(24)) = 276``, so the index term can
never overturn a strict cost comparison.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .core import (
    EPS_FEAS,
    PRICE_SCALE,
    DemandProfile,
    PumpConfig,
    Schedule,
    SolveResult,
    StorageTrajectory,
    Tariff,
    decode_codes,
    encode_bits,
)

KEY_SCALE = 10**6
_INF = np.iinfo(np.int64).max
#: largest horizon the exhaustive oracle will enumerate
BRUTEFORCE_MAX_H = 20
_CHUNK = 65536


class InfeasibleDemand(Exception):
    """No schedule keeps the storage within its bounds.

    ``hour`` is the earliest storage index at which every branch has left
    the bounds; ``direction`` is ``"underflow"`` or ``"overflow"``.
    """

    def __init__(self, hour: int, direction: str):
        super().__init__(f"infeasible: storage {direction} at hour {hour} on every branch")
        self.hour = hour
        self.direction = direction

    def __eq__(self, other):
        return (isinstance(other, InfeasibleDemand)
                and (self.hour, self.direction) == (other.hour, other.direction))

    def __hash__(self):
        return hash((self.hour, self.direction))


def _check_inputs(d: DemandProfile, tariff: Tariff, cfg: PumpConfig):
    if not len(d) == tariff.horizon == cfg.horizon:
        raise ValueError(
            f"horizon mismatch: demand {len(d)}, tariff {tariff.horizon}, config {cfg.horizon}")


def key_weights(tariff: Tariff) -> np.ndarray:
    """Per-hour integer contribution of an on-hour to the tie-breaking key."""
    if tariff.prices.max() > (np.iinfo(np.int64).max // KEY_SCALE) // 32:
        raise ValueError("prices too large for the integer cost key")
    return tariff.prices * KEY_SCALE + np.arange(tariff.horizon, dtype=np.int64)


def key_to_cost(key, cfg: PumpConfig):
    """Recover the base cost (currency units) from a tie-breaking key."""
    return cfg.p_max * (np.asarray(key) // KEY_SCALE) / PRICE_SCALE


def _cum_demand(hd: np.ndarray, n_trans: int) -> np.ndarray:
    # hd is (n, H); returns (n, n_trans) with entry t = sum(hd[:, :t+1])
    return np.cumsum(hd[:, :n_trans], axis=1)


def _violations(S, cfg):
    return S < cfg.s_min - EPS_FEAS, S > cfg.s_max + EPS_FEAS


def simulate(s: Schedule, d: DemandProfile, cfg: PumpConfig) -> StorageTrajectory:
    """Storage trajectory implied by a schedule, with a feasibility verdict."""
    if not len(s) == len(d) == cfg.horizon:
        raise ValueError("schedule, demand and config horizons differ")
    T = cfg.n_transitions
    D = _cum_demand(d.hd[None, :], T)[0]
    k = np.cumsum(s.bits[:T].astype(np.int64))
    S = np.empty(T + 1)
    S[0] = cfg.s0
    S[1:] = cfg.s0 + cfg.heat_per_step * k - D
    under, over = _violations(S, cfg)
    bad = under | over
    if not bad.any():
        return StorageTrajectory(S, True)
    t = int(np.argmax(bad))
    return StorageTrajectory(S, False, t, "underflow" if under[t] else "overflow")


@dataclass(frozen=True)
class BatchSolution:
    """Vectorised solver output for ``n`` profiles.

    Infeasible rows have ``feasible == False``, ``code == -1`` and carry the
    dead hour and its direction (1 = underflow, 2 = overflow).
    """

    feasible: np.ndarray
    code: np.ndarray
    key: np.ndarray
    cost: np.ndarray
    dead_hour: np.ndarray
    direction: np.ndarray

    def __len__(self):
        return len(self.feasible)


def _solve_chunk(hd, w, cfg):
    n, H = hd.shape
    T = cfg.n_transitions
    D = _cum_demand(hd, T)
    kk = np.arange(H + 1, dtype=np.int64)
    heat = cfg.heat_per_step * kk

    key = np.full((n, H + 1), _INF, dtype=np.int64)
    key[:, 0] = 0
    code = np.zeros((n, H + 1), dtype=np.int64)
    dead_hour = np.full(n, -1, dtype=np.int64)
    direction = np.zeros(n, dtype=np.int8)
    alive = np.ones(n, dtype=bool)

    for t in range(T):
        reach_off = key < _INF
        reach_on = np.zeros_like(reach_off)
        reach_on[:, 1:] = reach_off[:, :-1]

        on_key = np.full_like(key, _INF)
        on_key[:, 1:] = np.where(reach_off[:, :-1], key[:, :-1] + w[t], _INF)
        on_code = np.zeros_like(code)
        on_code[:, 1:] = code[:, :-1] + (np.int64(1) << t)

        take_on = on_key < key  # ties keep the off branch: smaller code
        new_key = np.where(take_on, on_key, key)
        new_code = np.where(take_on, on_code, code)

        S = cfg.s0 + heat[None, :] - D[:, t][:, None]
        under, over = _violations(S, cfg)
        new_key[under | over] = _INF

        died = alive & ~(new_key < _INF).any(axis=1)
        if died.any():
            reach = (reach_off | reach_on)[died]
            dead_hour[died] = t + 1
            direction[died] = np.where((under[died] & reach).any(axis=1), 1, 2)
            alive &= ~died
        key, code = new_key, new_code

    best = key.min(axis=1)
    tied = np.where(key == best[:, None], code, _INF)
    best_code = tied.min(axis=1)
    best_code[~alive] = -1
    best[~alive] = -1
    return alive, best_code, best, dead_hour, direction


def solve_batch(demands, tariff: Tariff, cfg: PumpConfig) -> BatchSolution:
    """Solve many profiles at once; ``demands`` is an (n, H) array in kWh."""
    hd = np.asarray(demands, dtype=np.float64)
    if hd.ndim != 2 or hd.shape[1] != cfg.horizon or tariff.horizon != cfg.horizon:
        raise ValueError("demands must be (n, horizon) and match the tariff horizon")
    if not np.all(np.isfinite(hd)) or np.any(hd < 0):
        raise ValueError("demands must be finite and >= 0")
    w = key_weights(tariff)
    parts = [_solve_chunk(hd[i:i + _CHUNK], w, cfg) for i in range(0, len(hd), _CHUNK)]
    if parts:
        feasible, code, key, dead, direction = (np.concatenate(p) for p in zip(*parts))
    else:
        feasible = np.zeros(0, bool)
        code = key = dead = np.zeros(0, np.int64)
        direction = np.zeros(0, np.int8)
    cost = np.where(feasible, key_to_cost(np.maximum(key, 0), cfg), np.nan)
    return BatchSolution(feasible, code, key, cost, dead, direction)


def _result(code: int, key: int, d: DemandProfile, cfg: PumpConfig) -> SolveResult:
    bits = decode_codes([code], cfg.horizon)[0]
    schedule = Schedule(bits)
    return SolveResult(schedule, float(key_to_cost(key, cfg)), int(key), simulate(schedule, d, cfg))


def solve(d: DemandProfile, tariff: Tariff, cfg: PumpConfig) -> SolveResult:
    """Cost-minimal feasible schedule for one demand profile.

    Raises :class:`InfeasibleDemand` when no schedule satisfies the bounds.
    """
    _check_inputs(d, tariff, cfg)
    sol = solve_batch(d.hd[None, :], tariff, cfg)
    if not sol.feasible[0]:
        raise InfeasibleDemand(int(sol.dead_hour[0]),
                               "underflow" if sol.direction[0] == 1 else "overflow")
    return _result(int(sol.code[0]), int(sol.key[0]), d, cfg)


@functools.lru_cache(maxsize=8)
def _all_schedules(H: int) -> np.ndarray:
    return decode_codes(np.arange(1 << H, dtype=np.int64), H)


def solve_bruteforce(d: DemandProfile, tariff: Tariff, cfg: PumpConfig) -> SolveResult:
    """Exhaustive reference solver over all 2^H schedules."""
    _check_inputs(d, tariff, cfg)
    H = cfg.horizon
    if H > BRUTEFORCE_MAX_H:
        raise ValueError(f"refusing to enumerate 2^{H} schedules (max H = {BRUTEFORCE_MAX_H})")
    bits = _all_schedules(H)
    T = cfg.n_transitions
    w = key_weights(tariff)
    keys = bits.astype(np.int64) @ w

    D = _cum_demand(d.hd[None, :], T)
    k = np.cumsum(bits[:, :T], axis=1, dtype=np.int64)
    S = cfg.s0 + cfg.heat_per_step * k - D
    under, over = _violations(S, cfg)
    bad = under | over
    feasible = ~bad.any(axis=1)
    if feasible.any():
        i = int(np.argmin(np.where(feasible, keys, _INF)))
        return _result(i, int(keys[i]), d, cfg)
    first = np.argmax(bad, axis=1)
    latest = int(first.max())
    at_latest = first == latest
    direction = "underflow" if under[at_latest, latest].any() else "overflow"
    raise InfeasibleDemand(latest + 1, direction)


def benchmark_cost(d: DemandProfile, tariff: Tariff, cfg: PumpConfig) -> float:
    """Cost of producing exactly the demanded heat every hour, no storage."""
    _check_inputs(d, tariff, cfg)
    return float(np.dot(d.hd / cfg.cop, tariff.in_currency()))


def benchmark_costs(demands, tariff: Tariff, cfg: PumpConfig) -> np.ndarray:
    hd = np.asarray(demands, dtype=np.float64)
    return (hd / cfg.cop) @ tariff.in_currency()


@dataclass(frozen=True)
class SavingsReport:
    """Optimal vs demand-following costs per profile.

    ``saving_pct`` is NaN where it is undefined (zero benchmark cost) or the
    profile is infeasible; those rows are excluded from the aggregates.
    """

    optimal_cost: np.ndarray
    benchmark_cost: np.ndarray
    saving_pct: np.ndarray
    feasible: np.ndarray
    n_infeasible: int
    n_undefined: int
    mean_saving_pct: float
    quantiles: dict

    def summary(self) -> dict:
        return {
            "n": int(len(self.feasible)),
            "n_infeasible": self.n_infeasible,
            "n_undefined": self.n_undefined,
            "mean_saving_pct": self.mean_saving_pct,
            "quantiles_saving_pct": self.quantiles,
        }


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def savings_report(profiles, tariff: Tariff, cfg: PumpConfig,
                   solution: BatchSolution | None = None) -> SavingsReport:
    hd = np.asarray([p.hd if isinstance(p, DemandProfile) else p for p in profiles], dtype=float)
    if hd.ndim != 2 or len(hd) == 0:
        raise ValueError("need at least one profile")
    if solution is None:
        solution = solve_batch(hd, tariff, cfg)
    bench = benchmark_costs(hd, tariff, cfg)
    opt = solution.cost
    undefined = solution.feasible & (bench == 0)
    valid = solution.feasible & ~undefined
    saving = np.full(len(hd), np.nan)
    saving[valid] = 100.0 * (bench[valid] - opt[valid]) / bench[valid]
    if valid.any():
        mean = float(np.mean(saving[valid]))
        qs = {f"q{int(q * 100):02d}": float(v)
              for q, v in zip(QUANTILES, np.quantile(saving[valid], QUANTILES))}
    else:
        mean = float("nan")
        qs = {f"q{int(q * 100):02d}": float("nan") for q in QUANTILES}
    return SavingsReport(opt, bench, saving, solution.feasible,
                         int((~solution.feasible).sum()), int(undefined.sum()), mean, qs)


class ScheduleOptimizer(BaseEstimator):
    """Exact solver exposed through the estimator ``predict`` interface.

    Lets the optimiser be scored with the same tools as the learned
    schedule predictors (its Hamming error against itself is zero).
    """

    def __init__(self, p_max=100.0, cop=1.6, s_min=0.0, s_max=200.0, s0=100.0,
                 terminal_mode="paper", tariff=None):
        self.p_max = p_max
        self.cop = cop
        self.s_min = s_min
        self.s_max = s_max
        self.s0 = s0
        self.terminal_mode = terminal_mode
        self.tariff = tariff

    def fit(self, X=None, y=None):
        return self

    def _setup(self, H):
        cfg = PumpConfig(self.p_max, self.cop, self.s_min, self.s_max, self.s0, H,
                         self.terminal_mode)
        tariff = Tariff(self.tariff) if self.tariff is not None else Tariff.default(horizon=H)
        return cfg, tariff

    def solve(self, X) -> BatchSolution:
        X = check_array(X, dtype=np.float64)
        cfg, tariff = self._setup(X.shape[1])
        return solve_batch(X, tariff, cfg)

    def predict(self, X):
        sol = self.solve(X)
        if not sol.feasible.all():
            i = int(np.argmin(sol.feasible))
            raise InfeasibleDemand(int(sol.dead_hour[i]),
                                   "underflow" if sol.direction[i] == 1 else "overflow")
        return decode_codes(sol.code, np.asarray(X).shape[1])
