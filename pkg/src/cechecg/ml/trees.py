"""Gini decision trees and a bootstrap random forest."""
from __future__ import annotations

import math

import numpy as np

from ..errors import TrainingError, ValidationError

_GAIN_EPS = 1e-12


def gini_impurity(counts):
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def gini_gain(y, left_mask, n_classes=None):
    """Impurity decrease of splitting labels ``y`` into ``left_mask`` / rest."""
    y = np.asarray(y, dtype=np.int64)
    left_mask = np.asarray(left_mask, dtype=bool)
    n_classes = n_classes or int(y.max()) + 1
    parent = gini_impurity(np.bincount(y, minlength=n_classes))
    nl, n = left_mask.sum(), len(y)
    gl = gini_impurity(np.bincount(y[left_mask], minlength=n_classes))
    gr = gini_impurity(np.bincount(y[~left_mask], minlength=n_classes))
    return parent - (nl * gl + (n - nl) * gr) / n


def _encode(y):
    classes, codes = np.unique(np.asarray(y), return_inverse=True)
    if len(classes) < 2:
        raise TrainingError(f"need at least two classes, got {classes.tolist()}")
    return classes, codes.astype(np.int64)


def _check_x(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"features must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite feature values")
    return x


class DecisionTreeClassifier:
    """CART-style tree: greedy binary splits maximising Gini gain.

    Ties go to the lowest feature index, then the lowest threshold.
    """

    def __init__(self, max_depth=15, min_samples_split=3, min_samples_leaf=2,
                 max_features=None, seed=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed

    def _n_features_per_split(self, p):
        mf = self.max_features
        if mf is None:
            return p
        if mf == "sqrt":
            return max(1, int(math.sqrt(p)))
        if mf == "log2":
            return max(1, int(math.log2(p)))
        if isinstance(mf, float):
            return max(1, int(mf * p))
        return max(1, min(p, int(mf)))

    def fit(self, x, y, classes=None):
        x = _check_x(x)
        if classes is None:
            self.classes_, codes = _encode(y)
        else:
            # forest members share the forest's class list even if a bootstrap misses one
            self.classes_ = np.asarray(classes)
            codes = np.searchsorted(self.classes_, np.asarray(y)).astype(np.int64)
        self._rng = np.random.default_rng(self.seed)
        self._k = len(self.classes_)
        self._mtry = self._n_features_per_split(x.shape[1])
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self._grow(x, codes, np.arange(len(codes)), 0)
        self.feature = np.array(self.feature, dtype=np.int64)
        self.threshold = np.array(self.threshold, dtype=np.float64)
        self.left = np.array(self.left, dtype=np.int64)
        self.right = np.array(self.right, dtype=np.int64)
        self.value = np.array(self.value, dtype=np.float64)
        del self._rng
        return self

    def _new_node(self, counts):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(counts / counts.sum())
        return len(self.feature) - 1

    def _grow(self, x, y, idx, depth):
        counts = np.bincount(y[idx], minlength=self._k).astype(np.float64)
        node = self._new_node(counts)
        m = len(idx)
        if (depth >= self.max_depth or m < self.min_samples_split
                or np.count_nonzero(counts) < 2):
            return node
        split = self._best_split(x, y, idx, counts)
        if split is None:
            return node
        f, thr = split
        go_left = x[idx, f] <= thr
        self.feature[node], self.threshold[node] = f, thr
        self.left[node] = self._grow(x, y, idx[go_left], depth + 1)
        self.right[node] = self._grow(x, y, idx[~go_left], depth + 1)
        return node

    def _best_split(self, x, y, idx, counts):
        m = len(idx)
        p = x.shape[1]
        if self._mtry < p:
            feats = np.sort(self._rng.choice(p, self._mtry, replace=False))
        else:
            feats = range(p)
        parent = 1.0 - np.sum((counts / m) ** 2)
        leaf = self.min_samples_leaf
        sizes = np.arange(1, m, dtype=np.float64)  # left size for a cut after position i-1
        valid_size = (sizes >= leaf) & (m - sizes >= leaf)
        onehot = np.eye(self._k)[y[idx]]
        best_gain, best = -np.inf, None
        for f in feats:
            xs = x[idx, f]
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            valid = valid_size & (xs[1:] > xs[:-1])
            if not valid.any():
                continue
            left = np.cumsum(onehot[order], axis=0)[:-1]
            right = counts - left
            gl = 1.0 - np.sum((left / sizes[:, None]) ** 2, axis=1)
            gr = 1.0 - np.sum((right / (m - sizes)[:, None]) ** 2, axis=1)
            gain = parent - (sizes * gl + (m - sizes) * gr) / m
            gain[~valid] = -np.inf
            i = int(np.argmax(gain))
            if gain[i] > best_gain + _GAIN_EPS:
                best_gain, best = gain[i], (int(f), 0.5 * (xs[i] + xs[i + 1]))
        return best

    def apply(self, x):
        x = _check_x(x)
        node = np.zeros(len(x), dtype=np.int64)
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            cur = node[inner]
            go_left = x[inner, self.feature[cur]] <= self.threshold[cur]
            node[inner] = np.where(go_left, self.left[cur], self.right[cur])

    def predict_proba(self, x):
        return self.value[self.apply(x)]

    def predict(self, x):
        return self.classes_[np.argmax(self.predict_proba(x), axis=1)]

    @property
    def node_count(self):
        return len(self.feature)


class RandomForestClassifier:
    """Bootstrap-aggregated Gini trees; probability is the fraction of tree votes."""

    def __init__(self, n_estimators=275, max_depth=21, min_samples_split=4,
                 min_samples_leaf=3, max_features="sqrt", seed=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed

    def fit(self, x, y):
        x = _check_x(x)
        self.classes_, codes = _encode(y)
        rng = np.random.default_rng(self.seed)
        seeds = rng.integers(0, 2**63 - 1, size=self.n_estimators)
        n = len(codes)
        self.trees_ = []
        for s in seeds:
            boot = np.random.default_rng(s).integers(0, n, size=n)
            tree = DecisionTreeClassifier(self.max_depth, self.min_samples_split,
                                          self.min_samples_leaf, self.max_features, seed=int(s))
            tree.fit(x[boot], self.classes_[codes[boot]], classes=self.classes_)
            self.trees_.append(tree)
        return self

    def predict_proba(self, x):
        x = _check_x(x)
        votes = np.zeros((len(x), len(self.classes_)))
        rows = np.arange(len(x))
        for tree in self.trees_:
            votes[rows, np.argmax(tree.predict_proba(x), axis=1)] += 1.0
        return votes / len(self.trees_)

    def predict(self, x):
        return self.classes_[np.argmax(self.predict_proba(x), axis=1)]
