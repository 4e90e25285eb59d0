"""Expression classifiers: logistic regression, Gini tree, random forest and their vote."""

from chirpface.ml.data import Dataset, evaluate_predictions, read_feature_csv, splits, window_features
from chirpface.ml.ensemble import (
    DEFAULT_TIE_POLICY,
    EnsembleModel,
    TrainConfig,
    TrainingError,
    evaluate,
    majority_vote,
    predict,
    train,
)
from chirpface.ml.logistic import LogisticRegression
from chirpface.ml.tree import DecisionTree, RandomForest, gini

__all__ = [
    "DEFAULT_TIE_POLICY", "Dataset", "DecisionTree", "EnsembleModel", "LogisticRegression",
    "RandomForest", "TrainConfig", "TrainingError", "evaluate", "evaluate_predictions", "gini",
    "majority_vote", "predict", "read_feature_csv", "splits", "train", "window_features",
]
