"""Multi-output CART and bagged forests predicting whole schedules."""
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import rng
from ._cart import apply_tree, build_tree
from .base import ScheduleModelMixin, check_demand, check_schedules

_FIELDS = ("feature", "threshold", "left", "right", "value")


class _Tree:
    """Flat node arrays of one fitted tree; ``feature == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    @property
    def node_count(self):
        return len(self.feature)

    @property
    def depth(self):
        depth = np.zeros(self.node_count, np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X):
        leaves = apply_tree(X, self.feature, self.threshold, self.left, self.right)
        return self.value[leaves]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in _FIELDS}

    @classmethod
    def from_dict(cls, d):
        dtypes = (np.int32, np.float64, np.int32, np.int32, np.uint8)
        return cls(*(np.asarray(d[k], dtype=t) for k, t in zip(_FIELDS, dtypes)))


def _depth_arg(max_depth):
    return -1 if max_depth is None else int(max_depth)


class _Presorted:
    def __init__(self, X, Y):
        self.XT = np.ascontiguousarray(X.T)
        self.order = np.argsort(self.XT, axis=1, kind="stable")
        self.Y = np.ascontiguousarray(Y)

    def grow(self, sample_idx, max_depth, min_leaf, m_try, seed):
        arrays = build_tree(self.XT, self.Y, self.order, sample_idx.astype(np.int64),
                            _depth_arg(max_depth), int(min_leaf), int(m_try), int(seed))
        return _Tree(*arrays)


class DecisionTreeScheduleModel(ScheduleModelMixin, BaseEstimator):
    """A single tree with one leaf schedule per region of demand space.

    Splits minimise the Gini impurity summed over all hours; leaves predict
    the per-hour majority (ties to "off").
    """

    def __init__(self, max_depth=10, min_samples_leaf=1):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, Y):
        X, Y = check_schedules(X, Y)
        self.n_features_in_ = X.shape[1]
        data = _Presorted(X, Y)
        self.tree_ = data.grow(np.arange(len(X)), self.max_depth, self.min_samples_leaf,
                               X.shape[1], 0)
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict(check_demand(self, X)).astype(np.int8)

    def state_dict(self):
        return {"n_features_in": self.n_features_in_, "tree": self.tree_.to_dict()}

    def load_state(self, state):
        self.n_features_in_ = state["n_features_in"]
        self.tree_ = _Tree.from_dict(state["tree"])
        return self


class RandomForestScheduleModel(ScheduleModelMixin, BaseEstimator):
    """Bagged multi-output trees with per-node feature subsampling.

    Tree ``b`` draws its bootstrap sample and its node-level feature choices
    from the stream keyed by ``(random_state, b)``, so the first ``k`` trees
    of a forest equal a forest fitted with ``n_estimators=k``. Predictions
    are per-hour majority votes, ties to "off". ``max_features=None`` uses
    every feature.
    """

    def __init__(self, n_estimators=400, max_depth=10, max_features=5, min_samples_leaf=1,
                 bootstrap=True, random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, Y):
        X, Y = check_schedules(X, Y)
        n, n_features = X.shape
        self.n_features_in_ = n_features
        m_try = n_features if self.max_features is None else min(int(self.max_features), n_features)
        data = _Presorted(X, Y)

        def grow(b):
            g = rng.stream(self.random_state, b, rng.FOREST)
            idx = g.integers(0, n, n) if self.bootstrap else np.arange(n)
            node_seed = int(g.integers(0, 2**63))
            return data.grow(idx, self.max_depth, self.min_samples_leaf, m_try, node_seed)

        if self.n_jobs == 1:
            self.estimators_ = [grow(b) for b in range(self.n_estimators)]
        else:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.estimators_ = list(pool.map(grow, range(self.n_estimators)))
        return self

    def vote_counts(self, X, n_trees=None):
        """Per-hour number of trees voting "on"."""
        check_is_fitted(self, "estimators_")
        X = check_demand(self, X)
        trees = self.estimators_[:n_trees]
        votes = np.zeros((len(X), trees[0].value.shape[1]), np.int32)
        for tree in trees:
            votes += tree.predict(X)
        return votes

    def predict(self, X, n_trees=None):
        """Majority vote; ``n_trees`` restricts the vote to the first trees."""
        k = len(self.estimators_[:n_trees])
        return (2 * self.vote_counts(X, n_trees) > k).astype(np.int8)

    def truncated(self, n_trees):
        """Copy holding only the first ``n_trees`` trees."""
        other = type(self)(**{**self.get_params(), "n_estimators": n_trees})
        other.n_features_in_ = self.n_features_in_
        other.estimators_ = self.estimators_[:n_trees]
        return other

    def state_dict(self):
        return {"n_features_in": self.n_features_in_,
                "trees": [t.to_dict() for t in self.estimators_]}

    def load_state(self, state):
        self.n_features_in_ = state["n_features_in"]
        self.estimators_ = [_Tree.from_dict(t) for t in state["trees"]]
        return self
