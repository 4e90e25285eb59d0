"""CART classification tree with Gini impurity, and a random forest of them."""

from __future__ import annotations

import math

import numpy as np


def gini(counts) -> float:
    """Gini impurity ``1 - sum p_k^2`` of a class-count vector."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.dot(p, p))


def _best_split(X, Y1h, idx, features):
    """Lowest weighted-Gini split of ``idx`` over ``features``.

    Candidate thresholds sit halfway between consecutive distinct values.
    Ties keep the earlier feature and the lower threshold, so the result does
    not depend on sample order.  Returns ``(feature, threshold)`` or None.
    """
    n = idx.shape[0]
    total = Y1h[idx].sum(axis=0)
    best = (math.inf, None, None)
    for f in sorted(features):
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cuts = np.nonzero(vs[1:] > vs[:-1])[0]
        if cuts.size == 0:
            continue
        left = np.cumsum(Y1h[idx[order]], axis=0)[cuts]
        right = total - left
        nl = (cuts + 1).astype(float)
        nr = n - nl
        gl = 1.0 - np.sum(left * left, axis=1) / (nl * nl)
        gr = 1.0 - np.sum(right * right, axis=1) / (nr * nr)
        score = (nl * gl + nr * gr) / n
        k = int(np.argmin(score))
        if score[k] < best[0]:
            lo, hi = vs[cuts[k]], vs[cuts[k] + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (float(score[k]), f, float(thr))
    if best[1] is None:
        return None
    return best[1], best[2]


class DecisionTree:
    """Binary CART tree; samples with ``x[feature] <= threshold`` go left.

    ``max_features`` limits how many randomly drawn features each node
    considers (``None`` = all, ``"sqrt"`` or an int).
    """

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2,
                 max_features=None, seed: int | None = 0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.seed = seed
        self.feature_ = None

    def _n_features(self, d: int) -> int:
        mf = self.max_features
        if mf is None:
            return d
        if mf == "sqrt":
            return max(1, int(math.sqrt(d)))
        return max(1, min(d, int(mf)))

    def fit(self, X, y, n_classes: int | None = None, sample_idx=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        K = int(n_classes if n_classes is not None else y.max() + 1)
        self.n_classes_ = K
        Y1h = np.eye(K)[y]
        rng = np.random.default_rng(self.seed)
        d = X.shape[1]
        m = self._n_features(d)
        feature, threshold, left, right, value, depth_of = [], [], [], [], [], []

        def new_node(idx, depth):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(Y1h[idx].sum(axis=0))
            depth_of.append(depth)
            return len(feature) - 1

        idx0 = np.arange(X.shape[0]) if sample_idx is None else np.asarray(sample_idx)
        stack = [(new_node(idx0, 0), idx0)]
        while stack:
            node, idx = stack.pop()
            counts = value[node]
            depth = depth_of[node]
            if (np.count_nonzero(counts) <= 1 or idx.shape[0] < self.min_samples_split
                    or (self.max_depth is not None and depth >= self.max_depth)):
                continue
            feats = range(d) if m == d else rng.choice(d, size=m, replace=False)
            split = _best_split(X, Y1h, idx, feats)
            if split is None:
                continue
            f, thr = split
            go_left = X[idx, f] <= thr
            feature[node], threshold[node] = f, thr
            li, ri = idx[go_left], idx[~go_left]
            left[node] = new_node(li, depth + 1)
            right[node] = new_node(ri, depth + 1)
            # right pushed first so the left subtree is numbered first
            stack.append((right[node], ri))
            stack.append((left[node], li))

        self.feature_ = np.asarray(feature, dtype=int)
        self.threshold_ = np.asarray(threshold, dtype=float)
        self.left_ = np.asarray(left, dtype=int)
        self.right_ = np.asarray(right, dtype=int)
        self.value_ = np.asarray(value, dtype=float).reshape(-1, K)
        return self

    @property
    def depth(self) -> int:
        self._check()
        depth = np.zeros(self.feature_.shape[0], dtype=int)
        for i in range(self.feature_.shape[0]):
            if self.left_[i] >= 0:
                depth[self.left_[i]] = depth[self.right_[i]] = depth[i] + 1
        return int(depth.max())

    def _check(self):
        if self.feature_ is None:
            raise RuntimeError("model is not trained")

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        self._check()
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature_[node]
            inner = f >= 0
            if not inner.any():
                return node
            xv = X[rows, np.where(inner, f, 0)]
            go_left = xv <= self.threshold_[node]
            nxt = np.where(go_left, self.left_[node], self.right_[node])
            node = np.where(inner, nxt, node)

    def predict_proba(self, X) -> np.ndarray:
        leaves = self.apply(X)
        v = self.value_[leaves]
        return v / v.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self) -> dict:
        self._check()
        return {"max_depth": self.max_depth, "n_classes": self.n_classes_,
                "feature": self.feature_.tolist(), "threshold": self.threshold_.tolist(),
                "left": self.left_.tolist(), "right": self.right_.tolist(),
                "value": self.value_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        t = cls(max_depth=d.get("max_depth"))
        t.n_classes_ = int(d["n_classes"])
        t.feature_ = np.asarray(d["feature"], dtype=int)
        t.threshold_ = np.asarray(d["threshold"], dtype=float)
        t.left_ = np.asarray(d["left"], dtype=int)
        t.right_ = np.asarray(d["right"], dtype=int)
        t.value_ = np.asarray(d["value"], dtype=float).reshape(-1, t.n_classes_)
        return t


class RandomForest:
    """Bagged Gini trees; prediction averages the trees' leaf class frequencies."""

    def __init__(self, n_trees: int = 100, max_depth: int = 10, max_features="sqrt",
                 bootstrap: bool = True, seed: int = 0):
        if max_depth is None or not 1 <= max_depth <= 10:
            raise ValueError("forest depth must lie in [1, 10]")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees_ = None

    def fit(self, X, y, n_classes: int | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        K = int(n_classes if n_classes is not None else y.max() + 1)
        n = X.shape[0]
        self.trees_ = []
        for ss in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            boot_seed, tree_seed = ss.generate_state(2)
            idx = (np.random.default_rng(int(boot_seed)).integers(0, n, n)
                   if self.bootstrap else np.arange(n))
            tree = DecisionTree(self.max_depth, max_features=self.max_features,
                                seed=int(tree_seed))
            self.trees_.append(tree.fit(X, y, K, sample_idx=idx))
        return self

    def predict_proba(self, X) -> np.ndarray:
        if self.trees_ is None:
            raise RuntimeError("model is not trained")
        return sum(t.predict_proba(X) for t in self.trees_) / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth,
                "max_features": self.max_features, "bootstrap": self.bootstrap,
                "seed": self.seed, "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        f = cls(d["n_trees"], d["max_depth"], d["max_features"], d["bootstrap"], d["seed"])
        f.trees_ = [DecisionTree.from_dict(t) for t in d["trees"]]
        return f
