"""Random-forest chain classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cart import UNLIMITED, DecisionTree, TreeConfig, fit_tree, presort

FOREST_TREE = TreeConfig(max_splits=UNLIMITED, min_node=1, split_criterion="gini")


def default_mtry(n_features: int) -> int:
    return max(1, math.isqrt(n_features))


@dataclass(frozen=True)
class ForestModel:
    trees: list[DecisionTree]
    n_tree: int
    mtry: int
    seed: int
    n_classes: int
    n_features: int

    def __post_init__(self):
        # majority class of each leaf, cached per tree
        object.__setattr__(self, "_votes", [t.leaf_class() for t in self.trees])

    def predict_proba(self, x) -> np.ndarray:
        """Fraction of trees voting for each class, rows of shape ``(n, N)``."""
        x = np.ascontiguousarray(x, dtype=float)
        if x.ndim == 1:
            return self.predict_proba(x[None, :])[0]
        if x.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[1]}")
        votes = np.zeros((len(x), self.n_classes))
        rows = np.arange(len(x))
        for tree, leaf_vote in zip(self.trees, self._votes):
            np.add.at(votes, (rows, leaf_vote[tree.apply(x)]), 1.0)
        return votes / len(self.trees)


def bootstrap_rows(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n)


def fit_forest_arrays(x, y, n_classes: int, *, n_tree: int = 500, mtry: int | None = None,
                      cfg: TreeConfig = FOREST_TREE, seed: int = 0) -> ForestModel:
    """Fit on raw arrays; ``y`` holds 0-based class indices."""
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise ValueError("empty training set")
    k = x.shape[1]
    mtry = default_mtry(k) if mtry is None else mtry
    if not 1 <= mtry <= k:
        raise ValueError(f"mtry={mtry} outside 1..{k}")
    presorted = presort(x)
    trees = []
    # one independent stream per tree, keyed by tree index
    for child in np.random.SeedSequence(seed).spawn(n_tree):
        rng = np.random.default_rng(child)
        rows = bootstrap_rows(rng, len(x))
        tree_seed = int(rng.integers(2**32))
        trees.append(fit_tree(x, y, cfg, rows=rows, n_classes=n_classes, mtry=mtry,
                              seed=tree_seed, presorted=presorted))
    return ForestModel(trees, n_tree, mtry, seed, n_classes, k)


def fit_random_forest(ds, n_tree: int = 500, mtry: int | None = None,
                      cfg: TreeConfig = FOREST_TREE, seed: int = 0) -> ForestModel:
    """Bagged Gini trees grown to purity on the training partition of ``ds``."""
    return fit_forest_arrays(ds.x_train, ds.y_train - 1, ds.n_chains, n_tree=n_tree,
                             mtry=mtry, cfg=cfg, seed=seed)
