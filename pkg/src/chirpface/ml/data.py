"""Labelled feature sets, train/test splits and evaluation metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from chirpface.labels import N_CLASSES, ExpressionLabel


@dataclass
class Dataset:
    """Feature rows ``X`` with integer labels ``y`` and optional session tags."""

    X: np.ndarray
    y: np.ndarray
    session: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray([int(ExpressionLabel.parse(v)) for v in np.ravel(self.y)], dtype=int)
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"{self.X.shape[0]} feature rows but {self.y.shape[0]} labels")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        if self.session is not None:
            self.session = np.asarray(self.session).astype(str)
            if self.session.shape[0] != self.y.shape[0]:
                raise ValueError("session tags misaligned with labels")

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], None if self.session is None else self.session[idx])

    @classmethod
    def concat(cls, parts) -> "Dataset":
        parts = list(parts)
        sess = None
        if all(p.session is not None for p in parts):
            sess = np.concatenate([p.session for p in parts])
        return cls(np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]), sess)


def read_feature_csv(path, label_column: str = "label", session_column: str = "session",
                     columns=("amplitude", "phase")) -> Dataset:
    """Load a feature CSV with an added label column (and optional session column)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    missing = [c for c in (*columns, label_column) if c not in rows[0]]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    X = np.array([[float(r[c]) for c in columns] for r in rows])
    y = [r[label_column] for r in rows]
    sess = [r[session_column] for r in rows] if session_column in rows[0] else None
    return Dataset(X, y, sess)


def window_features(X, window: int) -> np.ndarray:
    """Means over non-overlapping windows of ``window`` consecutive rows.

    A trailing partial window is dropped.
    """
    X = np.asarray(X, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    n = (X.shape[0] // window) * window
    return X[:n].reshape(-1, window, X.shape[1]).mean(axis=1)


def _stratified(y: np.ndarray, idx: np.ndarray, rng, test_fraction: float):
    train, test = [], []
    for c in np.unique(y[idx]):
        members = idx[y[idx] == c]
        members = members[rng.permutation(members.shape[0])]
        n_test = int(round(test_fraction * members.shape[0]))
        test.append(members[:n_test])
        train.append(members[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def splits(dataset: Dataset, mode: str = "overall", seed: int = 0, test_fraction: float = 0.2):
    """Train/test index pairs.

    ``overall``: one stratified 80/20 split.  ``inter_session``: one fold per
    session, that session held out.  ``intra_session``: one fold per
    session, stratified 80/20 inside the session.
    """
    mode = {"inter": "inter_session", "intra": "intra_session"}.get(mode, mode)
    rng = np.random.default_rng(seed)
    everything = np.arange(len(dataset))
    if mode == "overall":
        return [_stratified(dataset.y, everything, rng, test_fraction)]
    if mode not in ("inter_session", "intra_session"):
        raise ValueError(f"unknown split mode {mode!r}")
    if dataset.session is None:
        raise ValueError(f"{mode} split needs session tags")
    folds = []
    for s in np.unique(dataset.session):
        inside = everything[dataset.session == s]
        if mode == "inter_session":
            folds.append((everything[dataset.session != s], inside))
        else:
            folds.append(_stratified(dataset.y, inside, rng, test_fraction))
    return folds


def evaluate_predictions(y_true, y_pred, n_classes: int = N_CLASSES) -> dict:
    """Accuracy, confusion matrix (rows = true class) and per-class P/R/F1."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise ValueError("empty test set")
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (y_true, y_pred), 1)
    tp = np.diag(cm).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(cm.sum(axis=0) > 0, tp / cm.sum(axis=0), 0.0)
        recall = np.where(cm.sum(axis=1) > 0, tp / cm.sum(axis=1), 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
    names = [ExpressionLabel(i).display for i in range(n_classes)]
    return {
        "accuracy": float(tp.sum() / cm.sum()),
        "n": int(cm.sum()),
        "labels": names,
        "confusion": cm.tolist(),
        "per_class": {
            name: {"precision": float(p), "recall": float(r), "f1": float(f)}
            for name, p, r, f in zip(names, precision, recall, f1)
        },
    }
