"""Tree-ensemble chain classifiers: random forests and multinomial GBMs."""
from __future__ import annotations

import json

import numpy as np

from .cart import UNLIMITED, DecisionTree, TreeConfig, fit_tree, presort
from .forest import FOREST_TREE, ForestModel, default_mtry, fit_forest_arrays, fit_random_forest
from .gbm import GBM_TREE, GbmModel, deviance, fit_gbm, fit_gbm_arrays, variable_importance

__all__ = [
    "UNLIMITED", "DecisionTree", "TreeConfig", "fit_tree", "presort",
    "FOREST_TREE", "ForestModel", "default_mtry", "fit_forest_arrays", "fit_random_forest",
    "GBM_TREE", "GbmModel", "deviance", "fit_gbm", "fit_gbm_arrays", "variable_importance",
    "predict_proba", "predict_class", "fit_classifier", "model_to_json", "model_from_json",
]

SCHEMA_VERSION = 1


def predict_proba(model, x) -> np.ndarray:
    """Chain-probability simplex for a draw (1-D) or one simplex per row (2-D)."""
    return model.predict_proba(x)


def predict_class(model, x):
    """1-based chain id with the highest probability; ties go to the lowest id."""
    proba = model.predict_proba(x)
    return np.argmax(proba, axis=-1) + 1


def fit_classifier(kind: str, ds, seed: int = 0):
    """Fit the named classifier (``gbm`` or ``rf``) with default settings."""
    if kind == "gbm":
        return fit_gbm(ds, seed=seed)
    if kind == "rf":
        return fit_random_forest(ds, seed=seed)
    raise ValueError(f"unknown classifier {kind!r}; expected 'gbm' or 'rf'")


def _tree_dict(t: DecisionTree) -> dict:
    d = {k: getattr(t, k).tolist() for k in
         ("feature", "threshold", "left", "right", "improvement", "n_samples", "value")}
    if t.counts is not None:
        d["counts"] = t.counts.tolist()
    return d


def _tree_from(d: dict) -> DecisionTree:
    ints = {"feature", "left", "right", "n_samples"}
    kw = {k: np.asarray(v, dtype=np.int64 if k in ints else float) for k, v in d.items()
          if k != "counts"}
    counts = np.asarray(d["counts"], dtype=np.int64) if "counts" in d else None
    return DecisionTree(counts=counts, **kw)


def model_to_json(model) -> str:
    if isinstance(model, GbmModel):
        doc = {
            "kind": "gbm", "init_scores": model.init_scores.tolist(),
            "shrinkage": model.shrinkage, "n_rounds": model.n_rounds,
            "bag_fraction": model.bag_fraction, "n_features": model.n_features,
            "rounds": [[_tree_dict(t) for t in r] for r in model.rounds],
        }
    elif isinstance(model, ForestModel):
        doc = {
            "kind": "rf", "n_tree": model.n_tree, "mtry": model.mtry, "seed": model.seed,
            "n_classes": model.n_classes, "n_features": model.n_features,
            "trees": [_tree_dict(t) for t in model.trees],
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps({"schema_version": SCHEMA_VERSION, **doc})


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {doc.get('schema_version')}")
    if doc["kind"] == "gbm":
        return GbmModel(np.asarray(doc["init_scores"]),
                        [[_tree_from(t) for t in r] for r in doc["rounds"]],
                        doc["shrinkage"], doc["n_rounds"], doc["bag_fraction"], doc["n_features"])
    if doc["kind"] == "rf":
        return ForestModel([_tree_from(t) for t in doc["trees"]], doc["n_tree"], doc["mtry"],
                           doc["seed"], doc["n_classes"], doc["n_features"])
    raise ValueError(f"unknown model kind {doc['kind']!r}")
