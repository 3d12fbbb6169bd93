"""Reference values: Bayes-optimal R*, quantile R-squared and Markov stationary distributions."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats
from scipy.sparse.csgraph import connected_components

from .generators import TransitionMatrix, check_spd

FAMILIES = ("mvn", "student_t", "ar1_marginal", "cauchy", "discrete")


@dataclass(frozen=True)
class DensitySpec:
    """A chain's target density: ``family`` plus the parameters that family needs.

    mvn: mean, cov. student_t: mean, shape, nu. ar1_marginal: rho, sigma.
    cauchy: loc, scale. discrete: pi over states 1..D.
    """

    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown density family {self.family!r}; expected one of {FAMILIES}")
        p = dict(self.params)
        if self.family in ("mvn", "student_t"):
            key = "cov" if self.family == "mvn" else "shape"
            p[key] = np.atleast_2d(np.asarray(p[key], dtype=float))
            check_spd(p[key], key)
            p["mean"] = np.zeros(len(p[key])) if p.get("mean") is None else np.asarray(p["mean"], float)
            if self.family == "student_t" and p["nu"] <= 0:
                raise ValueError("nu must be positive")
        elif self.family == "ar1_marginal":
            if not abs(p["rho"]) < 1 or p["sigma"] <= 0:
                raise ValueError("ar1 marginal needs |rho| < 1 and sigma > 0")
        elif self.family == "cauchy":
            p.setdefault("loc", 0.0)
            p.setdefault("scale", 1.0)
            if p["scale"] <= 0:
                raise ValueError("cauchy scale must be positive")
        else:
            pi = np.asarray(p["pi"], dtype=float)
            if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
                raise ValueError("pi must be a probability simplex")
            p["pi"] = pi
        object.__setattr__(self, "params", p)

    @classmethod
    def mvn(cls, cov, mean=None):
        return cls("mvn", {"cov": cov, "mean": mean})

    @classmethod
    def student_t(cls, shape, nu, mean=None):
        return cls("student_t", {"shape": shape, "nu": nu, "mean": mean})

    @classmethod
    def ar1_marginal(cls, rho, sigma):
        return cls("ar1_marginal", {"rho": rho, "sigma": sigma})

    @classmethod
    def cauchy(cls, loc=0.0, scale=1.0):
        return cls("cauchy", {"loc": loc, "scale": scale})

    @classmethod
    def discrete(cls, pi):
        return cls("discrete", {"pi": pi})

    @property
    def dim(self) -> int:
        p = self.params
        if self.family == "mvn":
            return len(p["cov"])
        if self.family == "student_t":
            return len(p["shape"])
        return 1

    def _frozen(self):
        p = self.params
        if self.family == "mvn":
            return stats.multivariate_normal(p["mean"], p["cov"])
        if self.family == "student_t":
            return stats.multivariate_t(p["mean"], p["shape"], df=p["nu"])
        if self.family == "ar1_marginal":
            return stats.norm(0.0, p["sigma"] / math.sqrt(1.0 - p["rho"] ** 2))
        if self.family == "cauchy":
            return stats.cauchy(p["loc"], p["scale"])
        return None

    def logpdf(self, x) -> np.ndarray:
        """Log density (log mass for ``discrete``) of each row of ``x``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if self.family == "discrete":
            pi = self.params["pi"]
            state = np.rint(x[:, 0]).astype(np.int64)
            inside = (state >= 1) & (state <= len(pi)) & (state == x[:, 0])
            with np.errstate(divide="ignore"):
                logpi = np.log(pi)
            return np.where(inside, logpi[np.clip(state, 1, len(pi)) - 1], -np.inf)
        frozen = self._frozen()
        if self.family in ("mvn", "student_t"):
            return np.atleast_1d(frozen.logpdf(x))
        return frozen.logpdf(x[:, 0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``(n, dim)`` independent draws."""
        if self.family == "discrete":
            pi = self.params["pi"]
            return (rng.choice(len(pi), size=n, p=pi) + 1.0)[:, None]
        if self.family == "student_t":
            p = self.params
            z = rng.standard_normal((n, self.dim)) @ check_spd(p["shape"]).T
            return p["mean"] + z * np.sqrt(p["nu"] / rng.chisquare(p["nu"], n))[:, None]
        if self.family == "mvn":
            p = self.params
            return p["mean"] + rng.standard_normal((n, self.dim)) @ check_spd(p["cov"]).T
        return self._frozen().rvs(size=n, random_state=rng)[:, None]


class OptimalRStar(NamedTuple):
    r_star: float
    se: float


def bayes_optimal_rstar(densities: Sequence[DensitySpec], n_mc: int = 10000,
                        seed: int = 0) -> OptimalRStar:
    """R* of the maximum-likelihood chain classifier, by Monte Carlo with its standard error.

    Draws are stratified: ``n_mc / N`` from each chain (uniform priors).
    Ties in log density go to the lowest chain index.
    """
    n = len(densities)
    if n < 2:
        raise ValueError("need at least two densities")
    if len({d.dim for d in densities}) != 1:
        raise ValueError("densities disagree on dimension")
    if n_mc < n:
        raise ValueError(f"n_mc={n_mc} smaller than the number of chains")
    per_chain = n_mc // n
    hits = np.empty(n)
    for c, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        x = densities[c].sample(per_chain, np.random.default_rng(child))
        loglik = np.column_stack([d.logpdf(x) for d in densities])
        hits[c] = np.mean(np.argmax(loglik, axis=1) == c)
    # stratified estimator: R* = N * mean_c(hit rate c) = sum_c hit rate c
    return OptimalRStar(float(hits.sum()), float(np.sqrt(np.sum(hits * (1 - hits) / per_chain))))


PERCENTILE_GRID = np.arange(1, 1000) / 1000.0
MIN_RELIABLE_N = 1000


class QuantileR2(NamedTuple):
    r2: float
    flags: tuple[str, ...] = ()


def _r2(true_q: np.ndarray, sample_q: np.ndarray) -> float:
    if np.ptp(sample_q) == 0.0 or np.ptp(true_q) == 0.0:
        return float("nan")
    return float(np.corrcoef(sample_q, true_q)[0, 1] ** 2)


def quantile_r2(sample, target_quantile_fn: Callable | Sequence[Callable],
                percentiles=PERCENTILE_GRID) -> QuantileR2:
    """R-squared of regressing true quantiles on type-7 sample quantiles.

    A 2-D sample gives the mean over columns; ``target_quantile_fn`` is then either
    shared or a per-column list.
    """
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    fns = list(target_quantile_fn) if isinstance(target_quantile_fn, Sequence) else [target_quantile_fn] * x.shape[1]
    if len(fns) != x.shape[1]:
        raise ValueError(f"{len(fns)} quantile functions for {x.shape[1]} dimensions")
    flags = []
    if len(x) < MIN_RELIABLE_N:
        flags.append("low_n")
    percentiles = np.asarray(percentiles, dtype=float)
    sample_q = np.quantile(x, percentiles, axis=0, method="linear")
    values = []
    for j, fn in enumerate(fns):
        r2 = _r2(np.asarray(fn(percentiles), dtype=float), sample_q[:, j])
        if np.isnan(r2):
            flags.append(f"constant_dim_{j + 1}")
            r2 = 0.0
        values.append(r2)
    return QuantileR2(float(np.mean(values)), tuple(flags))


class MarkovChainError(ValueError):
    pass


def _period(adj: np.ndarray) -> int:
    """Period of an irreducible chain: gcd of level differences over all edges of a BFS tree."""
    level = np.full(len(adj), -1)
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u, v in zip(*np.nonzero(adj)):
        g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g


def stationary_distribution(p: TransitionMatrix | np.ndarray, tol: float = 1e-12,
                            max_iter: int = 1_000_000) -> np.ndarray:
    """Stationary simplex by power iteration, cross-checked against a direct linear solve."""
    mat = (p if isinstance(p, TransitionMatrix) else TransitionMatrix(p)).p
    d = len(mat)
    adj = mat > 0
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    if n_comp > 1:
        raise MarkovChainError(f"transition matrix is reducible ({n_comp} communicating classes)")
    period = _period(adj)
    if period != 1:
        raise MarkovChainError(f"transition matrix is periodic with period {period}")

    pi = np.full(d, 1.0 / d)
    for _ in range(max_iter):
        nxt = pi @ mat
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise MarkovChainError(f"power iteration did not converge in {max_iter} steps")

    system = np.vstack([mat.T - np.eye(d), np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    direct = np.linalg.lstsq(system, rhs, rcond=None)[0]
    if np.max(np.abs(direct - pi)) > 1e-9:
        raise MarkovChainError("power iteration and linear solve disagree")
    return pi
