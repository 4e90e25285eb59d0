"""Majority-vote ensemble of logistic regression, a Gini tree and a random forest."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from chirpface.labels import N_CLASSES, ExpressionLabel
from chirpface.ml.data import Dataset, evaluate_predictions
from chirpface.ml.logistic import LogisticRegression
from chirpface.ml.tree import DecisionTree, RandomForest

MODEL_FORMAT = "chirpface-ensemble"
MODEL_VERSION = 1

DEFAULT_TIE_POLICY = (
    ExpressionLabel.SAD_NEUTRAL,
    ExpressionLabel.HAPPY,
    ExpressionLabel.ANGRY,
    ExpressionLabel.SURPRISE,
)

MIN_PER_CLASS = 8


class TrainingError(ValueError):
    pass


def majority_vote(votes: Sequence, tie_policy: Sequence = DEFAULT_TIE_POLICY) -> ExpressionLabel:
    """Label backed by the most votes; equal support goes to the earliest label in ``tie_policy``."""
    counts = Counter(ExpressionLabel.parse(v) for v in votes)
    if not counts:
        raise ValueError("no votes")
    top = max(counts.values())
    leaders = {lab for lab, c in counts.items() if c == top}
    for lab in tie_policy:
        lab = ExpressionLabel.parse(lab)
        if lab in leaders:
            return lab
    return min(leaders)


@dataclass
class TrainConfig:
    alpha: float = 1.0
    n_trees: int = 100
    forest_depth: int = 10
    tree_depth: int | None = None
    seed: int = 0
    parallel: bool = False


@dataclass
class EnsembleModel:
    logreg: LogisticRegression
    tree: DecisionTree
    forest: RandomForest
    tie_policy: tuple = field(default=DEFAULT_TIE_POLICY)
    n_features: int = 2

    @property
    def members(self) -> dict:
        return {"logreg": self.logreg, "tree": self.tree, "forest": self.forest}

    def member_predictions(self, X) -> np.ndarray:
        """``(n, 3)`` votes in member order logreg, tree, forest."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([m.predict(X) for m in self.members.values()])

    def predict(self, X) -> np.ndarray:
        votes = self.member_predictions(X)
        return np.array([int(majority_vote(row, self.tie_policy)) for row in votes], dtype=int)

    def predict_one(self, x) -> ExpressionLabel:
        return ExpressionLabel(int(self.predict(np.asarray(x, dtype=float)[None, :])[0]))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "labels": [ExpressionLabel(i).display for i in range(N_CLASSES)],
            "n_features": self.n_features,
            "tie_policy": [ExpressionLabel(int(t)).display for t in self.tie_policy],
            "logreg": self.logreg.to_dict(),
            "tree": self.tree.to_dict(),
            "forest": self.forest.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a version-1 ensemble model document")
        return cls(
            LogisticRegression.from_dict(d["logreg"]),
            DecisionTree.from_dict(d["tree"]),
            RandomForest.from_dict(d["forest"]),
            tuple(ExpressionLabel.parse(t) for t in d["tie_policy"]),
            int(d["n_features"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "EnsembleModel":
        return cls.from_dict(json.loads(text))


def _check_dataset(data: Dataset):
    classes, counts = np.unique(data.y, return_counts=True)
    if classes.size < 2:
        raise TrainingError(f"need at least two classes, found {classes.size}")
    thin = [ExpressionLabel(c).display for c, n in zip(classes, counts) if n < MIN_PER_CLASS]
    if thin:
        raise TrainingError(f"fewer than {MIN_PER_CLASS} samples for {', '.join(thin)}")
    _, inverse = np.unique(data.X, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    pairs = np.unique(np.column_stack([inverse, data.y]), axis=0)
    _, n_labels = np.unique(pairs[:, 0], return_counts=True)
    conflicts = int(np.sum(n_labels > 1))
    if conflicts:
        raise TrainingError(
            f"{conflicts} feature vector(s) appear with more than one label; "
            "the features cannot separate those samples")


def train(data: Dataset, config: TrainConfig | None = None) -> EnsembleModel:
    """Fit all three members on the same data."""
    cfg = config or TrainConfig()
    _check_dataset(data)
    members = (
        LogisticRegression(alpha=cfg.alpha),
        DecisionTree(max_depth=cfg.tree_depth, seed=cfg.seed),
        RandomForest(n_trees=cfg.n_trees, max_depth=cfg.forest_depth, seed=cfg.seed),
    )
    if cfg.parallel:
        with ThreadPoolExecutor(3) as pool:
            fitted = list(pool.map(lambda m: m.fit(data.X, data.y, N_CLASSES), members))
    else:
        fitted = [m.fit(data.X, data.y, N_CLASSES) for m in members]
    return EnsembleModel(*fitted, n_features=data.X.shape[1])


def predict(model: EnsembleModel, x) -> ExpressionLabel:
    if model is None:
        raise RuntimeError("model is not trained")
    return model.predict_one(x)


def evaluate(model: EnsembleModel, test: Dataset) -> dict:
    """Ensemble metrics plus each member's accuracy under ``"members"``."""
    if len(test) == 0:
        raise ValueError("empty test set")
    votes = model.member_predictions(test.X)
    ens = np.array([int(majority_vote(v, model.tie_policy)) for v in votes])
    out = evaluate_predictions(test.y, ens)
    out["members"] = {name: float(np.mean(votes[:, i] == test.y))
                      for i, name in enumerate(model.members)}
    return out
