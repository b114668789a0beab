import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import rng
from .base import ScheduleModelMixin, check_demand, check_schedules


class TrivialScheduleModel(ScheduleModelMixin, BaseEstimator):
    """Random schedules with the per-hour on-frequencies seen in training.

    Row ``i`` of a prediction draws each hour independently from
    Bernoulli(p_t) using the stream keyed by ``(random_state, i)``, so a
    prediction is reproducible and independent of batch composition order.
    """

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, Y):
        X, Y = check_schedules(X, Y)
        self.n_features_in_ = X.shape[1]
        self.on_frequency_ = Y.mean(axis=0)
        return self

    def predict(self, X, start: int = 0):
        check_is_fitted(self, "on_frequency_")
        X = check_demand(self, X)
        p = self.on_frequency_
        u = np.empty((len(X), len(p)))
        for i in range(len(X)):
            u[i] = rng.stream(self.random_state, start + i, rng.TRIVIAL).random(len(p))
        return (u < p).astype(np.int8)

    def expected_hamming(self, Y) -> float:
        """Expected error against targets ``Y`` under independent sampling."""
        q = np.asarray(Y, dtype=float).mean(axis=0)
        p = self.on_frequency_
        return float(np.sum(p * (1 - q) + q * (1 - p)))

    def state_dict(self):
        return {"on_frequency": self.on_frequency_.tolist(), "n_features_in": self.n_features_in_}

    def load_state(self, state):
        self.on_frequency_ = np.asarray(state["on_frequency"], dtype=float)
        self.n_features_in_ = state["n_features_in"]
        return self
