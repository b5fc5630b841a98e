"""Random forest with hard majority voting.

Tree induction (bootstrap + Gini splits over a random feature subset) is
delegated to scikit-learn; voting is done here so that a split vote goes
to the non-viral class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from ..errors import ParameterError


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    features_per_split: Optional[int] = None  # default ceil(sqrt(d))

    def resolved_features(self, d: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(math.sqrt(d)))
        return min(d, self.features_per_split)


@dataclass(eq=False)
class ForestModel:
    estimator: RandomForestClassifier
    n_features: int
    seed: int
    params: ForestParams

    @property
    def trees(self):
        return self.estimator.estimators_


def train_forest(x, y, params: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if np.unique(y).shape[0] < 2:
        raise ParameterError("training set must contain both classes")
    est = RandomForestClassifier(
        n_estimators=params.n_trees,
        criterion="gini",
        max_depth=params.max_depth,
        min_samples_leaf=params.min_leaf,
        max_features=params.resolved_features(x.shape[1]),
        bootstrap=True,
        random_state=seed,
        n_jobs=1,
    )
    est.fit(x, y)
    return ForestModel(est, x.shape[1], seed, params)


def predict(model: ForestModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote labels and the fraction of trees voting viral."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        width = x.shape[1] if x.ndim == 2 else None
        raise ParameterError(f"expected {model.n_features} features, got {width}")
    if x.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    classes = model.estimator.classes_
    votes = np.zeros(x.shape[0], dtype=np.int64)
    for tree in model.trees:
        votes += classes[tree.predict(x).astype(np.int64)] == 1
    n = len(model.trees)
    return (2 * votes > n).astype(np.int64), votes / n
