import numpy as np
from sklearn.utils.validation import check_array, check_X_y


def hamming_distance(a, b) -> np.ndarray:
    """Number of differing hours per row."""
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.count_nonzero(a != b, axis=-1)


def mean_hamming(y_true, y_pred) -> float:
    if len(y_true) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(hamming_distance(y_true, y_pred)))


def check_schedules(X, Y):
    """Validate a demand matrix and its (n, H) 0/1 target schedules."""
    X, Y = check_X_y(X, Y, multi_output=True, dtype=np.float64)
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError("targets must be an (n, H) array of schedules")
    if not np.all((Y == 0) | (Y == 1)):
        raise ValueError("targets must be 0/1")
    return X, Y.astype(np.uint8)


def check_demand(est, X):
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != est.n_features_in_:
        raise ValueError(f"expected {est.n_features_in_} features, got {X.shape[1]}")
    return X


class ScheduleModelMixin:
    """Shared scoring for models mapping demand profiles to schedules."""

    def hamming_error(self, X, Y) -> float:
        return mean_hamming(Y, self.predict(X))

    def score(self, X, Y):
        """Negative mean Hamming error (greater is better)."""
        return -self.hamming_error(X, Y)
