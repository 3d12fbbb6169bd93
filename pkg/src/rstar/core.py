"""R* point estimates, simplex-sampling uncertainty draws and decile breakdowns."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chains import ChainSet, LabeledDataset, make_labeled, split_chains
from .classifiers import fit_classifier, predict_class

SUMMARY_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class RStarResult:
    r_star: float
    accuracy: float
    n_chains_effective: int
    classifier: str
    uncertainty_draws: np.ndarray | None = None
    per_decile: list[tuple[int, np.ndarray]] | None = None
    model: object = field(default=None, repr=False, compare=False)
    dataset: LabeledDataset | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {
            "classifier": self.classifier,
            "r_star": self.r_star,
            "accuracy": self.accuracy,
            "n_chains": self.n_chains_effective,
        }
        if self.uncertainty_draws is not None:
            d = self.uncertainty_draws
            out["draws_summary"] = {"mean": float(d.mean()), "sd": float(d.std(ddof=1)) if len(d) > 1 else 0.0,
                                    **summarize(d), "frac_above_1": float(np.mean(d > 1))}
        if self.per_decile is not None:
            out["deciles"] = [{"decile": b, "n_draws": len(d),
                               "mean": float(d.mean()) if len(d) else None}
                              for b, d in self.per_decile]
        return out


def summarize(values) -> dict:
    """2.5/25/50/75/97.5% quantiles keyed like ``q2.5``."""
    values = np.asarray(values, dtype=float)
    qs = np.quantile(values, SUMMARY_QUANTILES)
    return {f"q{100 * p:g}": float(v) for p, v in zip(SUMMARY_QUANTILES, qs)}


def add_iteration_blocks(cs: ChainSet, n_blocks: int = 4) -> ChainSet:
    """Append a feature holding the contiguous-iteration block index 1..n_blocks."""
    n, s, _ = cs.shape
    block = np.floor(np.arange(s) * n_blocks / s) + 1
    extra = np.broadcast_to(block[None, :, None], (n, s, 1))
    return cs.replace(np.concatenate([cs.draws, extra], axis=2), (*cs.param_names, "iteration_block"))


def _derived_seeds(seed: int, n: int) -> list[int]:
    return [int(v) for v in np.random.SeedSequence(seed).generate_state(n)]


def compute_rstar(cs: ChainSet, classifier: str = "gbm", split: bool | int = True,
                  test_frac: float = 0.3, seed: int = 0, draws: int = 0,
                  iteration_block: bool = False, n_blocks: int = 4) -> RStarResult:
    """Train a chain classifier and return ``N * test accuracy``.

    ``split`` halves each chain first (an integer gives the split factor).
    ``draws > 0`` also returns that many simplex-sampling uncertainty draws.
    """
    factor = 2 if split is True else (1 if split is False else int(split))
    if factor > 1:
        cs = split_chains(cs, factor)
    if iteration_block:
        cs = add_iteration_blocks(cs, n_blocks)
    part_seed, fit_seed, draw_seed = _derived_seeds(seed, 3)
    ds = make_labeled(cs, test_frac, part_seed)
    model = fit_classifier(classifier, ds, seed=fit_seed)
    accuracy = float(np.mean(predict_class(model, ds.x_test) == ds.y_test))
    unc = rstar_uncertainty(model, ds.x_test, ds.y_test, draws, draw_seed) if draws > 0 else None
    return RStarResult(ds.n_chains * accuracy, accuracy, ds.n_chains, classifier, unc,
                       model=model, dataset=ds)


def _true_class_intervals(proba: np.ndarray, labels: np.ndarray):
    """For each row, the [lo, hi) slice of (0, 1) mapped to the true class."""
    cum = np.cumsum(proba, axis=1)
    cum[:, -1] = 1.0
    edges = np.hstack([np.zeros((len(cum), 1)), cum])
    rows = np.arange(len(labels))
    return edges[rows, labels - 1], edges[rows, labels]


def sample_accuracy(proba: np.ndarray, labels: np.ndarray, n_iter: int, seed: int) -> np.ndarray:
    """Accuracy of ``n_iter`` rounds of drawing each row's class from its simplex.

    Iteration ``i`` uses its own stream spawned from ``seed``.
    """
    labels = np.asarray(labels)
    if len(labels) == 0:
        return np.zeros(0)
    lo, hi = _true_class_intervals(proba, labels)
    out = np.empty(n_iter)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n_iter)):
        u = np.random.default_rng(child).random(len(labels))
        out[i] = np.mean((u >= lo) & (u < hi))
    return out


def rstar_uncertainty(model, x_test, y_test, n_draws: int = 1000, seed: int = 0) -> np.ndarray:
    """``n_draws`` R* values from sampling chain ids off the predicted simplexes.

    Simplexes are computed once and reused for every draw.
    """
    x_test = np.asarray(x_test, dtype=float)
    if len(x_test) == 0:
        raise ValueError("empty test set")
    proba = model.predict_proba(x_test)
    return proba.shape[1] * sample_accuracy(proba, np.asarray(y_test), n_draws, seed)


def expected_uncertainty_mean(model, x_test, y_test) -> float:
    """Limit of the mean uncertainty draw: N times the mean true-class probability."""
    proba = model.predict_proba(np.asarray(x_test, dtype=float))
    y = np.asarray(y_test)
    return float(proba.shape[1] * np.mean(proba[np.arange(len(y)), y - 1]))


def decile_bins(values: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """0-based bin of each value using empirical-quantile edges; ties fall to the lower bin."""
    values = np.asarray(values, dtype=float)
    probs = np.arange(1, n_bins) / n_bins
    edges = np.quantile(values, probs, method="inverted_cdf")
    return np.searchsorted(edges, values, side="left")


def decile_rstar(model, x_test, y_test, k: int, n_bins: int = 10, draws_per_bin: int = 1000,
                 seed: int = 0) -> list[tuple[int, np.ndarray]]:
    """Simplex-sampling R* draws restricted to each quantile bin of parameter ``k``.

    Bins are numbered from 1; an empty bin yields an empty draw array.
    """
    x_test = np.asarray(x_test, dtype=float)
    y_test = np.asarray(y_test)
    if len(x_test) < n_bins:
        raise ValueError(f"{len(x_test)} test rows cannot fill {n_bins} bins")
    proba = model.predict_proba(x_test)
    n_chains = proba.shape[1]
    bins = decile_bins(x_test[:, k], n_bins)
    out = []
    for b, bin_seed in zip(range(n_bins), _derived_seeds(seed, n_bins)):
        rows = bins == b
        acc = sample_accuracy(proba[rows], y_test[rows], draws_per_bin, bin_seed) if rows.any() else np.zeros(0)
        out.append((b + 1, n_chains * acc))
    return out


def _replicate(args):
    source, seed, kwargs = args
    cs = source(seed) if callable(source) else source
    return compute_rstar(cs, seed=seed, **kwargs).r_star


def rstar_replicates(source: ChainSet | Callable[[int], ChainSet], n_rep: int,
                     seeds=None, jobs: int = 1, **kwargs) -> np.ndarray:
    """R* from ``n_rep`` runs with varying seeds.

    ``source`` is either a fixed ChainSet (only partitioning and training vary) or a
    callable ``seed -> ChainSet`` that regenerates the data per replicate.
    """
    if n_rep < 1:
        raise ValueError("need at least one replicate")
    seeds = _derived_seeds(0, n_rep) if seeds is None else list(seeds)
    if len(seeds) != n_rep:
        raise ValueError(f"{len(seeds)} seeds for {n_rep} replicates")
    tasks = [(source, s, kwargs) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return np.array(list(pool.map(_replicate, tasks)))
    return np.array([_replicate(t) for t in tasks])
