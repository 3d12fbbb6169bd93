"""Multinomial-deviance gradient boosting with per-class regression trees."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_softmax, softmax

from .cart import DecisionTree, TreeConfig, fit_tree, presort

GBM_TREE = TreeConfig(max_splits=3, min_node=10, split_criterion="squared-error")


@dataclass(frozen=True)
class GbmModel:
    """``rounds[m][c]`` is the class-``c`` tree of boosting round ``m``."""

    init_scores: np.ndarray
    rounds: list[list[DecisionTree]]
    shrinkage: float
    n_rounds: int
    bag_fraction: float
    n_features: int
    train_deviance: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_classes(self) -> int:
        return len(self.init_scores)

    def decision_function(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[1]}")
        scores = np.tile(self.init_scores, (len(x), 1))
        for trees in self.rounds:
            for c, tree in enumerate(trees):
                scores[:, c] += self.shrinkage * tree.predict_value(x)
        return scores

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.predict_proba(x[None, :])[0]
        return softmax(self.decision_function(x), axis=1)


def deviance(scores: np.ndarray, y: np.ndarray) -> float:
    """Mean multinomial negative log-likelihood of 0-based labels ``y``."""
    return float(-np.mean(log_softmax(scores, axis=1)[np.arange(len(y)), y]))


def fit_gbm_arrays(x, y, n_classes: int, *, n_rounds: int = 50, shrinkage: float = 0.1,
                   cfg: TreeConfig = GBM_TREE, bag_fraction: float = 0.5,
                   seed: int = 0) -> GbmModel:
    """Fit on raw arrays; ``y`` holds 0-based class indices."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=np.int64)
    if not 0.0 < shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in (0, 1]")
    if not 0.0 < bag_fraction <= 1.0:
        raise ValueError("bag_fraction must lie in (0, 1]")
    absent = sorted(set(range(n_classes)) - set(np.unique(y).tolist()))
    if absent:
        raise ValueError(f"classes {[c + 1 for c in absent]} absent from training data")

    n = len(x)
    n_bag = int(np.floor(bag_fraction * n))
    if n_bag < 2 * cfg.min_node:
        raise ValueError(f"bag of {n_bag} rows cannot hold two nodes of {cfg.min_node}")
    presorted = presort(x)
    onehot = np.eye(n_classes)[y]
    scores = np.zeros((n, n_classes))
    rng = np.random.default_rng(seed)
    leaf_scale = (n_classes - 1) / n_classes
    rounds, dev = [], [deviance(scores, y)]
    for _ in range(n_rounds):
        resid = onehot - softmax(scores, axis=1)
        hess = np.abs(resid) * (1.0 - np.abs(resid))
        bag = rng.permutation(n)[:n_bag] if n_bag < n else np.arange(n)
        trees = [fit_tree(x, resid[:, c], cfg, rows=bag, hessian=hess[:, c],
                          leaf_scale=leaf_scale, presorted=presorted)
                 for c in range(n_classes)]
        for c, tree in enumerate(trees):
            scores[:, c] += shrinkage * tree.predict_value(x)
        rounds.append(trees)
        dev.append(deviance(scores, y))
    return GbmModel(np.zeros(n_classes), rounds, shrinkage, n_rounds, bag_fraction,
                    x.shape[1], np.asarray(dev))


def fit_gbm(ds, n_rounds: int = 50, shrinkage: float = 0.1, cfg: TreeConfig = GBM_TREE,
            bag_fraction: float = 0.5, seed: int = 0) -> GbmModel:
    """Boost ``n_rounds`` rounds on the training partition of ``ds``."""
    return fit_gbm_arrays(ds.x_train, ds.y_train - 1, ds.n_chains, n_rounds=n_rounds,
                          shrinkage=shrinkage, cfg=cfg, bag_fraction=bag_fraction, seed=seed)


def variable_importance(model: GbmModel) -> np.ndarray:
    """Summed split improvements per feature, scaled so the largest is 100."""
    imp = np.zeros(model.n_features)
    for trees in model.rounds:
        for tree in trees:
            internal = tree.feature >= 0
            np.add.at(imp, tree.feature[internal], tree.improvement[internal])
    top = imp.max()
    return imp * (100.0 / top) if top > 0 else imp
