import numpy as np
from scipy.special import expit, log_expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .base import ScheduleModelMixin, check_demand, check_schedules


def _grad(W, b, X, Y, l2):
    R = (expit(X @ W + b) - Y) / len(X)
    return X.T @ R + l2 * W, R.sum(axis=0)


def loss_and_grad(W, b, X, Y, l2):
    """Summed per-hour L2-regularised mean log-loss and its gradient.

    ``W`` is (n_features, n_outputs), ``b`` is (n_outputs,). The bias is not
    penalised.
    """
    Z = X @ W + b
    n = len(X)
    # -[y log s(z) + (1 - y) log s(-z)]
    nll = -(Y * log_expit(Z) + (1 - Y) * log_expit(-Z)).sum() / n
    loss = nll + 0.5 * l2 * np.sum(W * W)
    R = (expit(Z) - Y) / n
    return loss, X.T @ R + l2 * W, R.sum(axis=0)


class LogisticScheduleModel(ScheduleModelMixin, BaseEstimator):
    """One logistic classifier per hour on standardised demand.

    Trained by full-batch gradient descent from zero weights, so training is
    deterministic. Hours that are constant in the training targets are
    pinned to that constant. A predicted probability of exactly 0.5
    (e.g. untrained weights) maps to "off". With ``track_loss`` the
    objective before every step is kept in ``loss_curve_``.
    """

    def __init__(self, l2=0.0, learning_rate=0.5, epochs=300, track_loss=False):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.track_loss = track_loss

    def fit(self, X, Y):
        X, Y = check_schedules(X, Y)
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        Xs = (X - self.mean_) / self.scale_
        Yf = Y.astype(np.float64)

        frac = Yf.mean(axis=0)
        self.constant_ = np.where(frac == 0, 0, np.where(frac == 1, 1, -1)).astype(np.int8)
        live = self.constant_ < 0
        W = np.zeros((X.shape[1], Y.shape[1]))
        b = np.zeros(Y.shape[1])
        self.loss_curve_ = []
        if live.any():
            Wl, bl, Yl = W[:, live], b[live], Yf[:, live]
            for _ in range(self.epochs):
                if self.track_loss:
                    loss, gW, gb = loss_and_grad(Wl, bl, Xs, Yl, self.l2)
                    self.loss_curve_.append(float(loss))
                else:
                    gW, gb = _grad(Wl, bl, Xs, Yl, self.l2)
                Wl -= self.learning_rate * gW
                bl -= self.learning_rate * gb
            W[:, live], b[live] = Wl, bl
        self.coef_, self.intercept_ = W, b
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_demand(self, X)
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return expit(self.decision_function(X))

    def predict(self, X):
        out = (self.decision_function(X) > 0).astype(np.int8)
        fixed = self.constant_ >= 0
        out[:, fixed] = self.constant_[fixed]
        return out

    def state_dict(self):
        return {
            "n_features_in": self.n_features_in_,
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_.tolist(),
            "constant": self.constant_.tolist(),
        }

    def load_state(self, state):
        self.n_features_in_ = state["n_features_in"]
        self.mean_ = np.asarray(state["mean"], dtype=float)
        self.scale_ = np.asarray(state["scale"], dtype=float)
        self.coef_ = np.asarray(state["coef"], dtype=float)
        self.intercept_ = np.asarray(state["intercept"], dtype=float)
        self.constant_ = np.asarray(state["constant"], dtype=np.int8)
        return self
