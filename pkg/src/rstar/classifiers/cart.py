"""CART trees grown by a single numba kernel shared by both ensembles.

Classification trees split on Gini decrease and keep per-leaf class counts.
Regression trees split on squared-error reduction; a leaf's value is
``scale * sum(y) / sum(h)`` over its rows (0 when ``sum(h) == 0``), which is the
Newton step when ``y`` holds residuals and ``h`` the matching curvature terms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

GINI = 0
SQUARED_ERROR = 1
UNLIMITED = -1


@dataclass(frozen=True)
class TreeConfig:
    """``max_splits`` counts internal nodes; ``UNLIMITED`` grows to purity."""

    max_splits: int = 3
    min_node: int = 10
    split_criterion: str = "squared-error"

    def __post_init__(self):
        if self.max_splits != UNLIMITED and self.max_splits < 1:
            raise ValueError("max_splits must be >= 1 (or UNLIMITED)")
        if self.min_node < 1:
            raise ValueError("min_node must be >= 1")
        if self.split_criterion not in ("gini", "squared-error"):
            raise ValueError(f"unknown split criterion {self.split_criterion!r}")


@dataclass(frozen=True)
class DecisionTree:
    """Array-encoded binary tree. Node 0 is the root; ``feature == -1`` marks a leaf.

    ``counts`` (classification) or ``value`` (regression) is filled for leaves.
    ``improvement`` holds each internal node's criterion reduction.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    improvement: np.ndarray
    n_samples: np.ndarray
    value: np.ndarray
    counts: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_internal(self) -> int:
        return int(np.sum(self.feature >= 0))

    @property
    def n_leaves(self) -> int:
        return self.n_nodes - self.n_internal

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``x``."""
        return _apply(self.feature, self.threshold, self.left, self.right,
                      np.ascontiguousarray(x, dtype=np.float64))

    def predict_value(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]

    def leaf_class(self) -> np.ndarray:
        """Majority class (0-based) of every node's counts; ties go to the lowest class."""
        return np.argmax(self.counts, axis=1)

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        fields = ("feature", "threshold", "left", "right", "value")
        same = all(np.array_equal(getattr(self, f), getattr(other, f)) for f in fields)
        if self.counts is None or other.counts is None:
            return same and self.counts is other.counts
        return same and np.array_equal(self.counts, other.counts)

    __hash__ = None


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, x):
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(x.shape[0]):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@numba.njit(cache=True)
def _best_split(xs, w, y_cls, y_reg, order, start, end, features, n_feat, n_classes, criterion,
                min_node, total, left_cnt):
    """Best (gain, feature, threshold) over ``features`` for the node segment [start, end).

    ``order[f]`` lists sample positions sorted by feature ``f``; every node owns the
    same segment in each list. Position ``p`` stands for ``w[p]`` identical rows.
    Features are scanned in the given (ascending) order and thresholds in ascending
    order; the incumbent is replaced only on a strictly larger gain.
    """
    m = end - start
    best_gain = -np.inf
    best_feat = -1
    best_thr = 0.0
    n = 0.0
    for j in range(start, end):
        n += w[order[0, j]]
    if m < 2 or n < 2 * min_node:
        return best_gain, best_feat, best_thr

    total[:] = 0.0
    parent_sum = 0.0
    parent_sq = 0.0
    sq_left = 0.0
    sq_right = 0.0
    for j in range(start, end):
        p = order[0, j]
        if criterion == GINI:
            total[y_cls[p]] += w[p]
        else:
            parent_sum += w[p] * y_reg[p]
    if criterion == GINI:
        for c in range(n_classes):
            parent_sq += total[c] * total[c]
        parent_score = parent_sq / n
    else:
        parent_score = parent_sum * parent_sum / n

    for q in range(n_feat):
        f = features[q]
        seg = order[f, start:end]
        if xs[seg[0], f] == xs[seg[m - 1], f]:
            continue
        if criterion == GINI:
            left_cnt[:] = 0.0
            sq_left = 0.0
            sq_right = parent_sq
        sum_left = 0.0
        n_left = 0.0
        for i in range(1, m):
            p = seg[i - 1]
            wp = w[p]
            n_left += wp
            if criterion == GINI:
                c = y_cls[p]
                lc = left_cnt[c]
                rc = total[c] - lc
                sq_left += (2.0 * lc + wp) * wp
                sq_right -= (2.0 * rc - wp) * wp
                left_cnt[c] = lc + wp
            else:
                sum_left += wp * y_reg[p]
            n_right = n - n_left
            if n_left < min_node or n_right < min_node:
                continue
            lo = xs[p, f]
            hi = xs[seg[i], f]
            if hi <= lo:
                continue
            if criterion == GINI:
                gain = sq_left / n_left + sq_right / n_right - parent_score
            else:
                sum_right = parent_sum - sum_left
                gain = sum_left * sum_left / n_left + sum_right * sum_right / n_right - parent_score
            if gain > best_gain:
                best_gain = gain
                best_feat = f
                best_thr = 0.5 * (lo + hi)
                if best_thr >= hi:
                    best_thr = lo
    return best_gain, best_feat, best_thr


@numba.njit(cache=True)
def _is_pure(y_cls, seg):
    first = y_cls[seg[0]]
    for j in range(1, seg.shape[0]):
        if y_cls[seg[j]] != first:
            return False
    return True


@numba.njit(cache=True)
def _pick_features(pool, mtry, out):
    """Fill ``out[:mtry]`` with a uniform feature subset in ascending order."""
    n_features = pool.shape[0]
    if mtry >= n_features:
        for i in range(n_features):
            out[i] = i
        return
    for i in range(n_features):
        pool[i] = i
    for i in range(mtry):
        j = np.random.randint(i, n_features)
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    for i in range(mtry):
        v = pool[i]
        k = i - 1
        while k >= 0 and out[k] > v:
            out[k + 1] = out[k]
            k -= 1
        out[k + 1] = v


@numba.njit(cache=True)
def _sample_order(presorted, counts):
    """Per-feature sorted positions of the distinct rows of a sample.

    Positions index the rows with ``counts > 0`` in ascending row id.
    """
    n_features = presorted.shape[0]
    pos = np.full(counts.shape[0], -1, dtype=np.int64)
    total = 0
    for r in range(counts.shape[0]):
        if counts[r] > 0:
            pos[r] = total
            total += 1
    order = np.empty((n_features, total), dtype=np.int64)
    for f in range(n_features):
        j = 0
        for r in presorted[f]:
            if pos[r] >= 0:
                order[f, j] = pos[r]
                j += 1
    return order


@numba.njit(cache=True)
def _grow(xs, w, order, y_cls, y_reg, h, n_classes, criterion, max_splits, min_node, mtry, seed, scale):
    np.random.seed(seed)
    n_rows, n_features = xs.shape
    cap = 2 * n_rows + 1 if max_splits < 0 else min(2 * max_splits + 1, 2 * n_rows + 1)

    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    improvement = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    seg_start = np.zeros(cap, dtype=np.int64)
    seg_end = np.zeros(cap, dtype=np.int64)

    # pending split of each open leaf
    cand_gain = np.full(cap, -np.inf)
    cand_feat = np.full(cap, -1, dtype=np.int64)
    cand_thr = np.zeros(cap)
    open_nodes = np.empty(cap, dtype=np.int64)
    n_open = 0

    goes_left = np.zeros(n_rows, dtype=np.bool_)
    buf = np.empty(n_rows, dtype=np.int64)
    pool = np.empty(n_features, dtype=np.int64)
    feats = np.empty(n_features, dtype=np.int64)
    n_feat = min(mtry, n_features)
    total = np.zeros(n_classes)
    left_cnt = np.zeros(n_classes)

    n_nodes = 1
    seg_end[0] = n_rows
    n_samples[0] = int(w.sum())
    to_eval = np.zeros(2, dtype=np.int64)
    n_eval = 1
    n_split = 0
    while True:
        for e in range(n_eval):
            node = to_eval[e]
            s0 = seg_start[node]
            s1 = seg_end[node]
            if criterion == GINI and _is_pure(y_cls, order[0, s0:s1]):
                continue
            _pick_features(pool, mtry, feats)
            gain, f, thr = _best_split(xs, w, y_cls, y_reg, order, s0, s1, feats, n_feat,
                                       n_classes, criterion, min_node, total, left_cnt)
            if f < 0:
                continue
            if criterion == GINI:
                if gain < -1e-9:
                    continue
            elif gain <= 1e-12:
                continue
            cand_gain[node] = max(gain, 0.0)
            cand_feat[node] = f
            cand_thr[node] = thr
            open_nodes[n_open] = node
            n_open += 1

        if n_open == 0 or (max_splits >= 0 and n_split >= max_splits):
            break

        if max_splits < 0:
            pos = n_open - 1
        else:
            pos = 0
            for q in range(1, n_open):
                a = open_nodes[q]
                b = open_nodes[pos]
                if cand_gain[a] > cand_gain[b] or (cand_gain[a] == cand_gain[b] and a < b):
                    pos = q
        node = open_nodes[pos]
        open_nodes[pos] = open_nodes[n_open - 1]
        n_open -= 1

        s0 = seg_start[node]
        s1 = seg_end[node]
        f = cand_feat[node]
        thr = cand_thr[node]
        nl = 0
        wl = 0
        for j in range(s0, s1):
            p = order[0, j]
            goes_left[p] = xs[p, f] <= thr
            if goes_left[p]:
                nl += 1
                wl += int(w[p])
        # stable partition keeps every feature's segment sorted
        for g in range(n_features):
            a = 0
            b = 0
            for j in range(s0, s1):
                p = order[g, j]
                if goes_left[p]:
                    order[g, s0 + a] = p
                    a += 1
                else:
                    buf[b] = p
                    b += 1
            for j in range(b):
                order[g, s0 + a + j] = buf[j]

        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        feature[node] = f
        threshold[node] = thr
        left[node] = lnode
        right[node] = rnode
        improvement[node] = cand_gain[node]
        seg_start[lnode] = s0
        seg_end[lnode] = s0 + nl
        seg_start[rnode] = s0 + nl
        seg_end[rnode] = s1
        n_samples[lnode] = wl
        n_samples[rnode] = n_samples[node] - wl
        n_split += 1
        to_eval[0] = lnode
        to_eval[1] = rnode
        n_eval = 2

    counts = np.zeros((n_nodes, n_classes), dtype=np.int64)
    value = np.zeros(n_nodes)
    for node in range(n_nodes):
        if feature[node] >= 0:
            continue
        if criterion == GINI:
            for j in range(seg_start[node], seg_end[node]):
                p = order[0, j]
                counts[node, y_cls[p]] += int(w[p])
        else:
            num = 0.0
            den = 0.0
            for j in range(seg_start[node], seg_end[node]):
                p = order[0, j]
                num += w[p] * y_reg[p]
                den += w[p] * h[p]
            value[node] = scale * num / den if den > 0.0 else 0.0
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            improvement[:n_nodes], n_samples[:n_nodes], value, counts)


def presort(x: np.ndarray) -> np.ndarray:
    """Row indices sorted by each feature, shape ``(K, n)``."""
    return np.ascontiguousarray(np.argsort(x, axis=0, kind="stable").T)


def fit_tree(x, y, cfg: TreeConfig, *, rows=None, n_classes: int | None = None,
             hessian=None, leaf_scale: float = 1.0, mtry: int | None = None,
             seed: int = 0, presorted: np.ndarray | None = None) -> DecisionTree:
    """Grow one tree best-first until ``cfg.max_splits`` internal nodes exist.

    For ``gini``, ``y`` holds 0-based integer classes. For ``squared-error``, ``y``
    holds real targets; leaves store ``leaf_scale * sum(y) / sum(hessian)``, and
    with ``hessian=None`` the plain leaf mean. ``rows`` selects (possibly repeated)
    training rows; ``mtry`` draws a fresh feature subset at every split.
    Pass ``presorted=presort(x)`` when fitting many trees to the same ``x``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    rows = np.arange(len(x), dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    if len(rows) == 0:
        raise ValueError("cannot fit a tree to empty data")
    mtry = x.shape[1] if mtry is None else int(mtry)
    if not 1 <= mtry <= x.shape[1]:
        raise ValueError(f"mtry={mtry} outside 1..{x.shape[1]}")

    if presorted is None:
        presorted = presort(x)
    # duplicated rows are carried once with an integer weight
    counts = np.bincount(rows, minlength=len(x)).astype(np.int64)
    rows = np.flatnonzero(counts)
    w = counts[rows].astype(np.float64)
    order = _sample_order(presorted, counts)
    xs = np.ascontiguousarray(x[rows])
    if cfg.split_criterion == "gini":
        y_cls = np.asarray(y, dtype=np.int64)
        n_classes = int(y_cls.max()) + 1 if n_classes is None else n_classes
        y_cls = y_cls[rows]
        y_reg = np.zeros(1)
        h = np.zeros(1)
        criterion = GINI
    else:
        y_reg = np.asarray(y, dtype=np.float64)[rows]
        y_cls = np.zeros(1, dtype=np.int64)
        h = np.ones_like(y_reg) if hessian is None else np.asarray(hessian, dtype=np.float64)[rows]
        n_classes = 1
        criterion = SQUARED_ERROR
    out = _grow(xs, w, order, y_cls, y_reg, h, n_classes, criterion, cfg.max_splits,
                cfg.min_node, mtry, seed % (2**32), float(leaf_scale))
    feature, threshold, left, right, improvement, n_samples, value, counts = out
    return DecisionTree(feature, threshold, left, right, improvement, n_samples, value,
                        counts if criterion == GINI else None)
