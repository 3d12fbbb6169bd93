"""Chain storage, CSV ingestion and chain transforms."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special, stats


MIN_ITER = 4
MIN_ITER_DERIVED = 2
DERIVED_KEYS = {"split_factor", "thinned_by"}


class ChainSetError(ValueError):
    """Invalid chain data."""


class RaggedChainsError(ChainSetError):
    pass


class NonFiniteError(ChainSetError):
    pass


class CsvFormatError(ChainSetError):
    pass


@dataclass(frozen=True)
class ChainSet:
    """N chains of S draws of K parameters, stored as a read-only ``(N, S, K)`` array."""

    draws: np.ndarray
    param_names: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        draws = np.array(self.draws, dtype=float)
        if draws.ndim == 2:
            draws = draws[:, :, None]
        if draws.ndim != 3:
            raise ChainSetError(f"draws must be (chains, iterations, params), got shape {draws.shape}")
        n, s, k = draws.shape
        if n < 2:
            raise ChainSetError(f"need at least 2 chains, got {n}")
        # split or thinned sets may be shorter than source data
        min_iter = MIN_ITER_DERIVED if DERIVED_KEYS & set(self.meta) else MIN_ITER
        if s < min_iter:
            raise ChainSetError(f"need at least {min_iter} iterations per chain, got {s}")
        if k < 1:
            raise ChainSetError("need at least one parameter")
        if not np.all(np.isfinite(draws)):
            c, i, p = np.argwhere(~np.isfinite(draws))[0]
            raise NonFiniteError(f"non-finite value at chain {c + 1}, iteration {i + 1}, param {p + 1}")
        names = tuple(self.param_names) if self.param_names else tuple(f"x{j + 1}" for j in range(k))
        if len(names) != k:
            raise ChainSetError(f"{len(names)} parameter names for {k} parameters")
        draws.flags.writeable = False
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "param_names", names)

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_iter(self) -> int:
        return self.draws.shape[1]

    @property
    def n_params(self) -> int:
        return self.draws.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.draws.shape

    def param(self, k: int) -> np.ndarray:
        """Draws of parameter ``k`` (0-based) as an ``(N, S)`` array."""
        return self.draws[:, :, k]

    def replace(self, draws, param_names=None, **meta) -> "ChainSet":
        return ChainSet(draws, self.param_names if param_names is None else param_names,
                        {**self.meta, **meta})


@dataclass(frozen=True)
class CsvLayout:
    """How draws are laid out on disk.

    ``long``: one file, a ``chain`` column of 1-based ids plus parameter columns.
    ``per_chain``: one file per chain, every column a parameter.
    """

    mode: str = "long"
    chain_column: str = "chain"
    iteration_column: str | None = "iteration"
    params: tuple[str, ...] | None = None


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvFormatError(f"non-numeric cell {text!r} at row {row}, column {col!r}") from None
    if not math.isfinite(value):
        raise NonFiniteError(f"non-finite cell {text!r} at row {row}, column {col!r}")
    return value


def _read_rows(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    return header, rows


def load_csv(path, layout: CsvLayout | None = None) -> ChainSet:
    """Read draws from CSV.

    ``path`` is a single file for the long layout or a sequence of files (one per
    chain, in chain order) for ``per_chain``. Row numbers in errors count the header
    as row 1.
    """
    layout = layout or CsvLayout()
    if layout.mode == "per_chain":
        paths = [Path(path)] if isinstance(path, (str, Path)) else [Path(p) for p in path]
        return _load_per_chain(paths, layout)
    if layout.mode != "long":
        raise CsvFormatError(f"unknown layout mode {layout.mode!r}")

    path = Path(path)
    header, rows = _read_rows(path)
    if layout.chain_column not in header:
        raise CsvFormatError(f"{path}: no {layout.chain_column!r} column in header")
    skip = {layout.chain_column, layout.iteration_column}
    params = list(layout.params) if layout.params else [h for h in header if h not in skip]
    if not params:
        raise CsvFormatError(f"{path}: no parameter columns")
    missing = [p for p in params if p not in header]
    if missing:
        raise CsvFormatError(f"{path}: missing parameter columns {missing}")
    chain_col = header.index(layout.chain_column)
    cols = [header.index(p) for p in params]

    by_chain: dict[int, list[list[float]]] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
        try:
            chain_id = int(row[chain_col])
        except ValueError:
            raise CsvFormatError(
                f"non-integer chain id {row[chain_col]!r} at row {lineno}") from None
        by_chain.setdefault(chain_id, []).append(
            [_parse_float(row[c], lineno, header[c]) for c in cols])

    ids = sorted(by_chain)
    return _assemble([by_chain[i] for i in ids], ids, params, {"source": str(path)})


def _load_per_chain(paths: list[Path], layout: CsvLayout) -> ChainSet:
    chains, params = [], None
    for path in paths:
        header, rows = _read_rows(path)
        cols = [h for h in header if h != layout.iteration_column]
        if layout.params:
            cols = list(layout.params)
        if params is None:
            params = cols
        elif cols != params:
            raise CsvFormatError(f"{path}: columns {cols} differ from {params}")
        idx = [header.index(c) for c in cols]
        chains.append([[_parse_float(r[j], lineno, header[j]) for j in idx]
                       for lineno, r in enumerate(rows, start=2)])
    return _assemble(chains, list(range(1, len(chains) + 1)), params or [],
                     {"source": [str(p) for p in paths]})


def _assemble(chains, ids, params, meta) -> ChainSet:
    if len(chains) < 2:
        raise ChainSetError(f"need at least 2 chains, found {len(chains)}")
    lengths = [len(c) for c in chains]
    expected = max(set(lengths), key=lengths.count)
    for cid, length in zip(ids, lengths):
        if length != expected:
            raise RaggedChainsError(f"chain {cid} has {length} iterations, others have {expected}")
    return ChainSet(np.asarray(chains, dtype=float), tuple(params), {**meta, "chain_ids": list(ids)})


def write_csv(cs: ChainSet, path) -> None:
    """Write ``cs`` in the long layout; ``repr`` keeps floats bit-exact on reload."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "iteration", *cs.param_names])
        for n in range(cs.n_chains):
            for s in range(cs.n_iter):
                w.writerow([n + 1, s + 1, *(repr(float(v)) for v in cs.draws[n, s])])


def split_chains(cs: ChainSet, factor: int = 2) -> ChainSet:
    """Cut every chain into ``factor`` contiguous blocks, earliest block first.

    The first ``S mod factor`` iterations are dropped so the retained draws are the
    most recent ones.
    """
    if factor < 1:
        raise ChainSetError("split factor must be positive")
    if factor == 1:
        return cs
    n, s, k = cs.shape
    new_s = s // factor
    if new_s < 2:
        raise ChainSetError(f"splitting {s} iterations by {factor} leaves {new_s} per chain")
    kept = cs.draws[:, s - new_s * factor:, :]
    return cs.replace(kept.reshape(n * factor, new_s, k), split_factor=factor)


def thin(cs: ChainSet, k: int) -> ChainSet:
    """Keep iterations 1, 1+k, 1+2k, ..."""
    if k < 1:
        raise ChainSetError("thinning factor must be positive")
    return cs if k == 1 else cs.replace(cs.draws[:, ::k, :], thinned_by=k)


def subset_params(cs: ChainSet, selector: Sequence[int] | None = None, *, stride: int | None = None) -> ChainSet:
    """Select parameters by 1-based index list or by stride (1, 1+stride, ...)."""
    if stride is not None:
        if stride < 1:
            raise ChainSetError("stride must be positive")
        selector = range(1, cs.n_params + 1, stride)
    selector = list(selector or [])
    if not selector:
        raise ChainSetError("empty parameter selector")
    bad = [j for j in selector if not 1 <= j <= cs.n_params]
    if bad:
        raise ChainSetError(f"parameter indices {bad} outside 1..{cs.n_params}")
    idx = [j - 1 for j in selector]
    return cs.replace(cs.draws[:, :, idx], tuple(cs.param_names[i] for i in idx))


@dataclass(frozen=True)
class LabeledDataset:
    """Flattened draws with 1-based chain labels and a stratified train/test split.

    Row ``n * S + s`` holds iteration ``s`` of chain ``n``.
    """

    x: np.ndarray
    chain: np.ndarray
    train: np.ndarray
    test: np.ndarray
    n_chains: int
    seed: int

    @property
    def x_train(self):
        return self.x[self.train]

    @property
    def y_train(self):
        return self.chain[self.train]

    @property
    def x_test(self):
        return self.x[self.test]

    @property
    def y_test(self):
        return self.chain[self.test]


def n_test_rows(n_iter: int, test_frac: float) -> int:
    """Per-chain test-set size, rounding half up."""
    return int(math.floor(n_iter * test_frac + 0.5))


def make_labeled(cs: ChainSet, test_frac: float = 0.3, seed: int = 0) -> LabeledDataset:
    """Sample ``round(S * test_frac)`` test rows per chain without replacement."""
    if not 0.0 < test_frac < 1.0:
        raise ChainSetError(f"test_frac must lie in (0, 1), got {test_frac}")
    n, s, k = cs.shape
    n_test = n_test_rows(s, test_frac)
    if n_test < 1 or s - n_test < 1:
        raise ChainSetError(f"test_frac={test_frac} with {s} iterations leaves an empty partition")
    rng = np.random.default_rng(seed)
    test = np.concatenate([c * s + np.sort(rng.permutation(s)[:n_test]) for c in range(n)])
    mask = np.zeros(n * s, dtype=bool)
    mask[test] = True
    return LabeledDataset(
        x=cs.draws.reshape(n * s, k),
        chain=np.repeat(np.arange(1, n + 1), s),
        train=np.flatnonzero(~mask),
        test=test,
        n_chains=n,
        seed=seed,
    )


def fold(values) -> np.ndarray:
    """Absolute deviation from the median."""
    values = np.asarray(values, dtype=float)
    return np.abs(values - np.median(values))


def normal_quantile(p):
    return special.ndtri(p)


def rank_normalize_values(values: np.ndarray) -> np.ndarray:
    """Pooled average ranks mapped through the normal quantile, same shape as input."""
    values = np.asarray(values, dtype=float)
    size = values.size
    ranks = stats.rankdata(values, method="average").reshape(values.shape)
    return normal_quantile((ranks - 0.375) / (size + 0.25))


def rank_normalize(cs: ChainSet, k: int = 0) -> np.ndarray:
    """Rank-normalized draws of parameter ``k`` (0-based), shaped ``(N, S)``."""
    if cs.n_chains * cs.n_iter < 4:
        raise ChainSetError("rank normalization needs at least 4 pooled values")
    return rank_normalize_values(cs.param(k))
