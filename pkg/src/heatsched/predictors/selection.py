"""Train/validation/test splitting, grid search and the results table."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone
from sklearn.model_selection import ParameterGrid

from .. import rng
from .base import mean_hamming
from .logistic import LogisticScheduleModel
from .tree import DecisionTreeScheduleModel, RandomForestScheduleModel
from .trivial import TrivialScheduleModel

SPLIT_RATIOS = (0.70, 0.15, 0.15)

KINDS = {
    "trivial": TrivialScheduleModel,
    "decision_tree": DecisionTreeScheduleModel,
    "random_forest": RandomForestScheduleModel,
    "logistic_regression": LogisticScheduleModel,
}

DEFAULT_GRIDS = {
    "trivial": {},
    "decision_tree": {"max_depth": [4, 6, 8, 10, 12]},
    "random_forest": {"max_depth": [4, 6, 8, 10, 12], "n_estimators": [100, 200, 400]},
    "logistic_regression": {"l2": [0.0, 1e-3, 1e-1]},
}


def split_indices(n: int, seed: int, ratios=SPLIT_RATIOS):
    """Disjoint, exhaustive train/validation/test index arrays.

    A pure function of ``(seed, n)``.
    """
    if n < 3:
        raise ValueError("need at least 3 samples to split")
    perm = rng.stream(seed, n, rng.SPLIT).permutation(n)
    n_train = int(ratios[0] * n)
    n_val = int(ratios[1] * n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass
class LabeledDataset:
    """Demand profiles with their optimal schedules and a fixed split."""

    X: np.ndarray
    Y: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    @classmethod
    def from_arrays(cls, X, Y, seed: int = 0):
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.int8)
        if len(X) != len(Y):
            raise ValueError("X and Y lengths differ")
        return cls(X, Y, *split_indices(len(X), seed))

    def part(self, name):
        idx = getattr(self, name)
        return self.X[idx], self.Y[idx]


@dataclass
class Selection:
    kind: str
    model: object
    params: dict
    val_hamming: float
    test_hamming: float
    grid: list = field(default_factory=list)


def _params_str(params: dict) -> str:
    return ";".join(f"{k}={params[k]}" for k in sorted(params))


def _forest_groups(grid):
    """Group forest grid points that differ only in ``n_estimators``."""
    groups: dict[tuple, list] = {}
    for params in ParameterGrid(grid):
        rest = tuple(sorted((k, v) for k, v in params.items() if k != "n_estimators"))
        groups.setdefault(rest, []).append(params)
    return groups


def select_hyperparams(kind: str, data: LabeledDataset, grid=None, base=None) -> Selection:
    """Exhaustive grid search on validation Hamming error; test scored once.

    For forests, every ``n_estimators`` value is read off one forest of the
    largest size (valid because tree ``b`` does not depend on forest size).
    Ties on the validation score keep the earliest grid point.
    """
    base = base if base is not None else KINDS[kind]()
    grid = DEFAULT_GRIDS[kind] if grid is None else grid
    Xtr, Ytr = data.part("train")
    Xva, Yva = data.part("val")
    Xte, Yte = data.part("test")

    rows = []
    if isinstance(base, RandomForestScheduleModel) and "n_estimators" in grid:
        for points in _forest_groups(grid).values():
            biggest = max(p["n_estimators"] for p in points)
            model = clone(base).set_params(**{**points[0], "n_estimators": biggest})
            model.fit(Xtr, Ytr)
            for params in points:
                sub = model.truncated(params["n_estimators"])
                rows.append((params, sub, mean_hamming(Yva, sub.predict(Xva))))
    else:
        for params in ParameterGrid(grid):
            model = clone(base).set_params(**params).fit(Xtr, Ytr)
            rows.append((params, model, mean_hamming(Yva, model.predict(Xva))))

    best = min(range(len(rows)), key=lambda i: (rows[i][2], i))
    params, model, val = rows[best]
    test = mean_hamming(Yte, model.predict(Xte))
    table = [{"params": p, "val_hamming": v} for p, _, v in rows]
    return Selection(kind, model, params, val, test, table)


def run_all(data: LabeledDataset, grids=None, kinds=tuple(KINDS)) -> list[Selection]:
    grids = grids or {}
    return [select_hyperparams(k, data, grids.get(k)) for k in kinds]


def write_leaderboard(selections, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["kind", "hyperparams", "val_hamming", "test_hamming"])
        for s in selections:
            w.writerow([s.kind, _params_str(s.params), repr(s.val_hamming), repr(s.test_hamming)])


def write_grid(selections, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["kind", "hyperparams", "val_hamming"])
        for s in selections:
            for row in s.grid:
                w.writerow([s.kind, _params_str(row["params"]), repr(row["val_hamming"])])


def model_to_dict(model) -> dict:
    kind = next(k for k, cls in KINDS.items() if type(model) is cls)
    return {"kind": kind, "hyperparameters": model.get_params(), "state": model.state_dict()}


def model_from_dict(d: dict):
    model = KINDS[d["kind"]](**d["hyperparameters"])
    return model.load_state(d["state"])


def save_model(model, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f)
        f.write("\n")


def load_model(path):
    with open(path) as f:
        return model_from_dict(json.load(f))
