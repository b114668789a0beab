"""Statistical baselines that try to reproduce optimal schedules from demand."""
from .base import hamming_distance, mean_hamming
from .logistic import LogisticScheduleModel, loss_and_grad
from .selection import (
    DEFAULT_GRIDS,
    KINDS,
    LabeledDataset,
    Selection,
    load_model,
    model_from_dict,
    model_to_dict,
    run_all,
    save_model,
    select_hyperparams,
    split_indices,
    write_grid,
    write_leaderboard,
)
from .tree import DecisionTreeScheduleModel, RandomForestScheduleModel
from .trivial import TrivialScheduleModel

__all__ = [
    "DEFAULT_GRIDS",
    "KINDS",
    "DecisionTreeScheduleModel",
    "LabeledDataset",
    "LogisticScheduleModel",
    "RandomForestScheduleModel",
    "Selection",
    "TrivialScheduleModel",
    "hamming_distance",
    "load_model",
    "loss_and_grad",
    "mean_hamming",
    "model_from_dict",
    "model_to_dict",
    "run_all",
    "save_model",
    "select_hyperparams",
    "split_indices",
    "write_grid",
    "write_leaderboard",
]
