"""Seeded batch experiments: sample, solve, analyse, learn.

All artifacts are written sorted by profile index with round-trippable
float formatting, so equal inputs and seeds give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import predictors
from .core import DEFAULT_MT, DEFAULT_MT_HOURS, DEFAULT_VT_RATIO, PumpConfig, Tariff, bits_to_string
from .demand import DemandStats, default_stats, fit_lognormal, load_stats, sample_profiles
from .optimizer import savings_report, solve_batch
from .space import space_report

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ["profile_index", "schedule_bits", "schedule_code", "cost",
                    "benchmark_cost", "saving_pct", "feasible"]


@dataclass
class TariffSpec:
    mt: int = DEFAULT_MT
    vt_ratio: float = DEFAULT_VT_RATIO
    mt_hours: list = field(default_factory=lambda: list(DEFAULT_MT_HOURS))

    def build(self, horizon: int = 24) -> Tariff:
        return Tariff.default(self.mt, self.vt_ratio, self.mt_hours, horizon)


@dataclass
class PredictSpec:
    kinds: list = field(default_factory=lambda: list(predictors.KINDS))
    grids: dict | None = None
    split_seed: int | None = None


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a run; echoed as ``config.json``."""

    stats: str | None = None
    tariff: TariffSpec = field(default_factory=TariffSpec)
    pump: PumpConfig = field(default_factory=PumpConfig)
    n_samples: int = 100_000
    seed: int = 0
    out: str = "out"
    predict: PredictSpec = field(default_factory=PredictSpec)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def to_dict(self) -> dict:
        return {
            "stats": self.stats,
            "tariff": asdict(self.tariff),
            "pump": self.pump.to_dict(),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "out": self.out,
            "predict": asdict(self.predict),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"stats", "tariff", "pump", "n_samples", "seed", "out", "predict"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            stats=d.get("stats"),
            tariff=TariffSpec(**d.get("tariff", {})),
            pump=PumpConfig(**d.get("pump", {})),
            n_samples=int(d.get("n_samples", 100_000)),
            seed=int(d.get("seed", 0)),
            out=d.get("out", "out"),
            predict=PredictSpec(**d.get("predict", {})),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1, sort_keys=True)
            f.write("\n")

    def demand_stats(self) -> DemandStats:
        return default_stats() if self.stats is None else load_stats(self.stats)


def _fmt(x) -> str:
    if isinstance(x, float) or isinstance(x, np.floating):
        x = float(x)
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_profiles(path, X) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["profile_index"] + [f"h{t}" for t in range(X.shape[1])])
        for i, row in enumerate(X.tolist()):
            w.writerow([i] + [repr(v) for v in row])


def read_profiles(path) -> np.ndarray:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in r[1:]] for r in reader]
    return np.asarray(rows, dtype=np.float64).reshape(-1, len(header) - 1)


def read_schedules(path):
    """Return (schedule bits, feasible mask) from a batch results CSV."""
    bits, feasible = [], []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            ok = rec["feasible"] == "1"
            feasible.append(ok)
            bits.append([int(c) for c in rec["schedule_bits"]] if ok else None)
    feasible = np.asarray(feasible, dtype=bool)
    H = len(next(b for b in bits if b is not None)) if feasible.any() else 0
    Y = np.zeros((len(bits), H), np.int8)
    for i, b in enumerate(bits):
        if b is not None:
            Y[i] = b
    return Y, feasible


def run_pipeline(cfg: ExperimentConfig) -> dict:
    """Sample, solve and analyse ``cfg.n_samples`` profiles into ``cfg.out``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")

    if cfg.pump.horizon != 24:
        raise ValueError("the demand model is defined for 24 hourly values")
    tariff = cfg.tariff.build(cfg.pump.horizon)
    model = fit_lognormal(cfg.demand_stats())
    X = sample_profiles(model, cfg.n_samples, cfg.seed)
    sol = solve_batch(X, tariff, cfg.pump)
    savings = savings_report(X, tariff, cfg.pump, sol)

    write_profiles(out / "profiles.csv", X)
    H = cfg.pump.horizon
    with open(out / "schedules.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SCHEDULE_COLUMNS)
        for i in range(len(X)):
            ok = bool(sol.feasible[i])
            code = int(sol.code[i])
            bits = bits_to_string((code >> t) & 1 for t in range(H)) if ok else ""
            w.writerow([i, bits, code if ok else "", _fmt(sol.cost[i]),
                        _fmt(savings.benchmark_cost[i]), _fmt(savings.saving_pct[i]), int(ok)])
    with open(out / "savings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["profile_index", "optimal_cost", "benchmark_cost", "saving_pct"])
        for i in range(len(X)):
            w.writerow([i, _fmt(sol.cost[i]), _fmt(savings.benchmark_cost[i]),
                        _fmt(savings.saving_pct[i])])
    summary_savings = savings.summary()
    with open(out / "savings_summary.json", "w") as f:
        json.dump(summary_savings, f, indent=1)
        f.write("\n")

    summary = {"n": cfg.n_samples, "n_infeasible": int((~sol.feasible).sum()),
               "mean_saving_pct": savings.mean_saving_pct}
    if sol.feasible.any():
        report = space_report(sol.code[sol.feasible], H)
        report.write_json(out / "space_report.json")
        report.write_curve_csv(out / "space_plot.csv")
        summary.update(m_hat=report.fit.m_hat, max_multiplicity=report.max_multiplicity,
                       distinct=report.histogram.distinct)
    return summary


def run_predict(cfg: ExperimentConfig, pipeline_dir=None) -> list:
    """Grid-search every predictor kind on a finished pipeline run."""
    src = Path(pipeline_dir or cfg.out)
    out = Path(cfg.out)
    X = read_profiles(src / "profiles.csv")
    Y, feasible = read_schedules(src / "schedules.csv")
    if len(X) != len(Y):
        raise ValueError("profiles.csv and schedules.csv disagree on the number of rows")
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "predict_config.json")

    split_seed = cfg.seed if cfg.predict.split_seed is None else cfg.predict.split_seed
    data = predictors.LabeledDataset.from_arrays(X[feasible], Y[feasible], split_seed)
    grids = cfg.predict.grids or {}
    selections = []
    for kind in cfg.predict.kinds:
        logger.info("grid search: %s", kind)
        base = predictors.KINDS[kind]()
        if "random_state" in base.get_params():
            base.set_params(random_state=cfg.seed)
        selections.append(predictors.select_hyperparams(kind, data, grids.get(kind), base))

    predictors.write_leaderboard(selections, out / "leaderboard.csv")
    predictors.write_grid(selections, out / "grid.csv")
    models = out / "models"
    models.mkdir(exist_ok=True)
    for s in selections:
        predictors.save_model(s.model, models / f"{s.kind}.json")
    return selections
