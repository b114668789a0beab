"""Correlated lognormal model of daily heat demand.

Hourly demands are modelled as ``exp(N(mu, sigma))`` with ``mu`` and
``sigma`` chosen so that the lognormal mean vector and covariance matrix
equal the empirical ones (linear-space moment matching).
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import rng

logger = logging.getLogger(__name__)

HOURS = 24


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DemandStats:
    """Hourly mean demand (kWh) and hour-by-hour covariance (kWh^2)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _readonly(self.mean)
        cov = _readonly(self.cov)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError("cov must be a square matrix matching mean")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("stats must be finite")
        scale = max(np.abs(cov).max(), 1e-300)
        if np.abs(cov - cov.T).max() > 1e-9 * scale:
            raise ValueError("cov is not symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValueError("cov has a negative variance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DemandStats":
        return cls(d["mean"], d["cov"])


def load_stats(path) -> DemandStats:
    with open(path) as f:
        return DemandStats.from_dict(json.load(f))


def save_stats(stats: DemandStats, path) -> None:
    with open(path, "w") as f:
        json.dump(stats.to_dict(), f, indent=1)
        f.write("\n")


def default_stats() -> DemandStats:
    """Bundled demand statistics for a residential heating-season day.

    The values are hand-built approximations of a typical profile (morning
    peak near 07:00, smaller evening peak near 19:00, 20-34 kWh per hour)
    with a 30 % coefficient of variation and positive correlations that
    decay with the hour lag. They are not measured data.
    """
    text = resources.files("heatsched").joinpath("data/default_stats.json").read_text()
    return DemandStats.from_dict(json.loads(text))


def stats_from_days(days) -> DemandStats:
    days = np.asarray(days, dtype=np.float64)
    if days.ndim != 2 or len(days) < 2:
        raise ValueError("need at least 2 complete days")
    return DemandStats(days.mean(axis=0), np.cov(days, rowvar=False, ddof=1))


def ingest_history(rows) -> tuple[DemandStats, list[str]]:
    """Build hourly statistics from ``(date, hour, demand_kwh)`` rows.

    Returns the statistics and the list of rejected (incomplete) dates.
    Duplicate ``(date, hour)`` rows and negative demands raise ``ValueError``.
    """
    by_day: dict[str, dict[int, float]] = {}
    for date, hour, demand in rows:
        date = str(date)
        hour = int(hour)
        demand = float(demand)
        if not 0 <= hour < HOURS:
            raise ValueError(f"{date}: hour {hour} outside 0..23")
        if not np.isfinite(demand) or demand < 0:
            raise ValueError(f"{date} hour {hour}: invalid demand {demand}")
        day = by_day.setdefault(date, {})
        if hour in day:
            raise ValueError(f"duplicate row for {date} hour {hour}")
        day[hour] = demand

    complete, rejects = [], []
    for date in sorted(by_day):
        day = by_day[date]
        if len(day) == HOURS:
            complete.append([day[h] for h in range(HOURS)])
        else:
            rejects.append(date)
    if rejects:
        logger.warning("rejected %d incomplete day(s): %s", len(rejects), ", ".join(rejects))
    if len(complete) < 2:
        raise ValueError(f"need at least 2 complete days, got {len(complete)}")
    return stats_from_days(complete), rejects


def read_history_csv(path) -> list[tuple[str, int, float]]:
    """Read a ``date,hour,demand_kwh`` CSV, validating ISO dates."""
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = {"date", "hour", "demand_kwh"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            date = dt.date.fromisoformat(rec["date"].strip()).isoformat()
            rows.append((date, int(rec["hour"]), float(rec["demand_kwh"])))
    return rows


@dataclass(frozen=True, eq=False)
class LognormalModel:
    """Gaussian parameters in log space plus the Cholesky factor used to sample.

    ``sigma_raw`` is the moment-matched covariance before positive-definite
    repair; ``sigma`` is what ``chol`` factors.
    """

    mu: np.ndarray
    sigma: np.ndarray
    chol: np.ndarray
    sigma_raw: np.ndarray

    def __post_init__(self):
        for name in ("mu", "sigma", "chol", "sigma_raw"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def n_hours(self) -> int:
        return len(self.mu)


def lognormal_moments(mu, sigma):
    """Mean vector and covariance of ``exp(N(mu, sigma))`` in closed form."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    d = np.diag(sigma)
    mean = np.exp(mu + d / 2)
    cov = np.outer(mean, mean) * np.expm1(sigma)
    return mean, cov


def _repair_psd(sigma: np.ndarray) -> np.ndarray:
    sigma = (sigma + sigma.T) / 2
    n = len(sigma)
    floor = 1e-10 * np.trace(sigma) / n
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() < floor:
        vals = np.maximum(vals, floor)
        sigma = (vecs * vals) @ vecs.T
        sigma = (sigma + sigma.T) / 2
    return sigma


def _cholesky_with_jitter(sigma: np.ndarray):
    try:
        return sigma, np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-8
    eye = np.eye(len(sigma))
    while jitter <= 1e-4:
        try:
            jittered = sigma + jitter * eye
            return jittered, np.linalg.cholesky(jittered)
        except np.linalg.LinAlgError:
            jitter *= 2
    raise np.linalg.LinAlgError("covariance could not be made positive definite")


def fit_lognormal(stats: DemandStats) -> LognormalModel:
    """Moment-match a multivariate lognormal to hourly mean and covariance."""
    mean, cov = stats.mean, stats.cov
    if np.any(mean <= 0):
        raise ValueError(f"non-positive mean at hour(s) {np.flatnonzero(mean <= 0).tolist()}")
    ratio = 1.0 + cov / np.outer(mean, mean)
    if np.any(ratio <= 0):
        i, j = np.argwhere(ratio <= 0)[0]
        raise ValueError(f"1 + cov/(mean*mean) <= 0 for hour pair ({i}, {j})")
    sigma_raw = np.log(ratio)
    mu = np.log(mean) - np.diag(sigma_raw) / 2
    sigma, chol = _cholesky_with_jitter(_repair_psd(sigma_raw))
    return LognormalModel(mu, sigma, chol, sigma_raw)


def profiles_from_normals(model: LognormalModel, z) -> np.ndarray:
    """Map standard-normal draws ``z`` (n, H) to demand profiles."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    return np.exp(model.mu + z @ model.chol.T)


def standard_normals(n: int, seed: int, n_hours: int = HOURS, start: int = 0) -> np.ndarray:
    """Row ``i`` comes from the stream keyed by ``(seed, start + i)``."""
    z = np.empty((n, n_hours))
    for i in range(n):
        z[i] = rng.stream(seed, start + i, rng.SAMPLING).standard_normal(n_hours)
    return z


def sample_profiles(model: LognormalModel, n: int, seed: int, start: int = 0) -> np.ndarray:
    """Draw ``n`` synthetic daily profiles as an (n, H) array in kWh.

    Profile ``i`` depends only on ``(seed, start + i)``, so batches can be
    generated in any order or in pieces with identical results.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return profiles_from_normals(model, standard_normals(n, seed, model.n_hours, start))


class LognormalDemandModel(BaseEstimator):
    """Estimator wrapper: ``fit`` on observed days, then ``sample`` new ones.

    ``X`` is an (n_days, 24) array of hourly demands.
    """

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        return self.fit_stats(stats_from_days(X))

    def fit_stats(self, stats: DemandStats):
        self.stats_ = stats
        self.model_ = fit_lognormal(stats)
        self.n_features_in_ = self.model_.n_hours
        return self

    def sample(self, n: int, start: int = 0) -> np.ndarray:
        check_is_fitted(self, "model_")
        return sample_profiles(self.model_, n, self.random_state, start)
