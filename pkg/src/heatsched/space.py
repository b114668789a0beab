"""Occupancy of the schedule space by optimal solutions.

Counts how often each distinct schedule recurs, compares that with the
Poisson occupancy expected if every one of the 2^H schedules were equally
likely, and estimates the size of an equivalent uniform space from a
zero-truncated Poisson fit.
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.stats import poisson

from .core import Schedule, encode_schedule

DAYS_PER_YEAR = 365
HEATING_SEASON_DAYS = 190


@dataclass(frozen=True)
class MultiplicityHistogram:
    """``counts_by_multiplicity[m]`` distinct schedules occur exactly ``m`` times."""

    n: int
    counts_by_multiplicity: dict
    distinct: int
    horizon: int

    @property
    def max_multiplicity(self) -> int:
        return max(self.counts_by_multiplicity, default=0)

    @property
    def mean_multiplicity(self) -> float:
        return self.n / self.distinct


def code_counts(schedules, horizon: int | None = None) -> Counter:
    """Occurrences per integer code; accepts Schedules or integer codes."""
    schedules = list(schedules) if not isinstance(schedules, np.ndarray) else schedules
    if len(schedules) and isinstance(schedules[0], Schedule):
        hs = {s.horizon for s in schedules}
        if len(hs) > 1:
            raise ValueError(f"mixed schedule horizons: {sorted(hs)}")
        if horizon is not None and hs != {horizon}:
            raise ValueError(f"schedules have horizon {hs.pop()}, expected {horizon}")
        return Counter(encode_schedule(s) for s in schedules)
    codes = np.asarray(schedules, dtype=np.int64)
    if horizon is not None and (np.any(codes < 0) or np.any(codes >= 1 << horizon)):
        raise ValueError(f"codes outside [0, 2^{horizon})")
    values, counts = np.unique(codes, return_counts=True)
    return Counter(dict(zip(values.tolist(), counts.tolist())))


def histogram_from_counts(counts: Counter, horizon: int) -> MultiplicityHistogram:
    by_mult = Counter(counts.values())
    return MultiplicityHistogram(
        n=int(sum(counts.values())),
        counts_by_multiplicity=dict(sorted(by_mult.items())),
        distinct=len(counts),
        horizon=horizon,
    )


def build_histogram(schedules, horizon: int | None = None) -> MultiplicityHistogram:
    """Histogram of multiplicities; integer codes default to horizon 24."""
    if not isinstance(schedules, np.ndarray):
        schedules = list(schedules)
    if len(schedules) and isinstance(schedules[0], Schedule):
        counts = code_counts(schedules, horizon)
        horizon = schedules[0].horizon
    else:
        horizon = 24 if horizon is None else horizon
        counts = code_counts(schedules, horizon)
    if not counts:
        raise ValueError("need at least one schedule")
    return histogram_from_counts(counts, horizon)


@dataclass(frozen=True)
class PoissonBaseline:
    """Occupancy rate if ``n`` draws fall uniformly on ``2^H`` schedules."""

    lam: float

    @classmethod
    def uniform(cls, n: int, horizon: int = 24) -> "PoissonBaseline":
        return cls(n / 2.0**horizon)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")


def baseline_fraction_at_most(k: int, baseline: PoissonBaseline) -> float:
    """P(Poisson(lambda) <= k)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(poisson.cdf(k, baseline.lam))


def truncated_mean(lam):
    """Mean of the zero-truncated Poisson distribution."""
    return lam / -np.expm1(-lam)


@dataclass(frozen=True)
class PoissonFit:
    """Zero-truncated Poisson fit of observed multiplicities.

    When no schedule repeats the rate is not identifiable: ``degenerate`` is
    set, ``lambda_hat`` is 0, ``m_hat`` is infinite and ``m_lower`` holds the
    conventional lower bound ``n^2 / 2`` (the space size at which one
    colliding pair would be expected).
    """

    lambda_hat: float
    m_hat: float
    repeat_years_365: float
    repeat_years_season: float
    degenerate: bool = False
    m_lower: float | None = None


def fit_truncated_poisson(h: MultiplicityHistogram) -> PoissonFit:
    if h.n < 1 or h.distinct < 1:
        raise ValueError("empty histogram")
    mean = h.n / h.distinct
    if mean <= 1.0:
        return PoissonFit(0.0, math.inf, math.inf, math.inf, True, h.n**2 / 2)
    lo, hi = 1e-12, 50.0
    while truncated_mean(hi) < mean:
        hi *= 2
    lam = bisect(lambda x: truncated_mean(x) - mean, lo, hi, xtol=1e-12, maxiter=500)
    m_hat = h.n / lam
    return PoissonFit(lam, m_hat, m_hat / DAYS_PER_YEAR, m_hat / HEATING_SEASON_DAYS)


@dataclass(frozen=True)
class SpaceReport:
    histogram: MultiplicityHistogram
    baseline: PoissonBaseline
    fit: PoissonFit

    @property
    def max_multiplicity(self) -> int:
        return self.histogram.max_multiplicity

    def curve(self, k_max: int | None = None):
        """Rows of fraction-at-most-k curves.

        ``empirical`` is taken over observed distinct schedules, ``baseline``
        over all 2^H cells; the ``_all_cells`` / ``_occupied`` columns give
        the opposite conventions for each.
        """
        h = self.histogram
        k_max = max(k_max or 0, h.max_multiplicity, 1)
        cells = 2.0**h.horizon
        p0 = float(poisson.pmf(0, self.baseline.lam))
        rows, acc = [], 0
        for k in range(1, k_max + 1):
            acc += h.counts_by_multiplicity.get(k, 0)
            base = baseline_fraction_at_most(k, self.baseline)
            rows.append({
                "k": k,
                "empirical_fraction_at_most_k": acc / h.distinct,
                "baseline_fraction_at_most_k": base,
                "empirical_fraction_at_most_k_all_cells": (cells - h.distinct + acc) / cells,
                "baseline_fraction_at_most_k_occupied": (base - p0) / (1 - p0),
            })
        return rows

    def to_dict(self) -> dict:
        h, f = self.histogram, self.fit

        def finite(x):
            return None if x is None or not math.isfinite(x) else x

        return {
            "n": h.n,
            "horizon": h.horizon,
            "distinct": h.distinct,
            "counts_by_multiplicity": {str(m): c for m, c in h.counts_by_multiplicity.items()},
            "lambda_baseline": self.baseline.lam,
            "lambda_hat": f.lambda_hat,
            "m_hat": finite(f.m_hat),
            "m_hat_lower_bound": f.m_lower,
            "degenerate": f.degenerate,
            "repeat_years_365": finite(f.repeat_years_365),
            "repeat_years_season": finite(f.repeat_years_season),
            "max_multiplicity": h.max_multiplicity,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")

    def write_curve_csv(self, path, k_max: int | None = 8) -> None:
        rows = self.curve(k_max)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def space_report(schedules, horizon: int | None = None) -> SpaceReport:
    h = build_histogram(schedules, horizon)
    return SpaceReport(h, PoissonBaseline.uniform(h.n, h.horizon), fit_truncated_poisson(h))
