"""Seeded synthetic chain generators for known target distributions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numba
import numpy as np
from scipy.signal import lfilter

from .chains import ChainSet

SYM_TOL = 1e-12
ROW_SUM_TOL = 1e-12


def chain_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generator per chain, keyed by chain index."""
    return [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n)]


@dataclass(frozen=True)
class Ar1Config:
    rho: float = 0.3
    sigmas: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0 / 3.0)
    n_iter: int = 2000
    x0: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))


def gen_ar1(cfg: Ar1Config, seed: int = 0) -> ChainSet:
    """AR(1) paths ``x_t = rho x_{t-1} + eps_t`` with ``eps_t ~ N(0, sigma_n)`` per chain."""
    out = np.empty((len(cfg.sigmas), cfg.n_iter))
    for n, (sigma, rng) in enumerate(zip(cfg.sigmas, chain_rngs(seed, len(cfg.sigmas)))):
        eps = sigma * rng.standard_normal(cfg.n_iter)
        out[n], _ = lfilter([1.0], [1.0, -cfg.rho], eps, zi=[cfg.rho * cfg.x0])
    return ChainSet(out)


def check_spd(mat, what: str = "matrix") -> np.ndarray:
    """Return the lower Cholesky factor, raising if ``mat`` is not symmetric PD."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{what} must be square, got {mat.shape}")
    if np.max(np.abs(mat - mat.T)) > SYM_TOL * max(1.0, np.max(np.abs(mat))):
        raise ValueError(f"{what} is not symmetric")
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise ValueError(f"{what} is not positive definite") from None


@dataclass(frozen=True)
class MvnConfig:
    """Per-chain covariance matrices; ``means`` default to zero."""

    covariances: tuple[np.ndarray, ...]
    means: tuple[np.ndarray, ...] | None = None
    cholesky: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        covs = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in self.covariances)
        dims = {c.shape[0] for c in covs}
        if len(dims) != 1:
            raise ValueError(f"chains disagree on dimension: {sorted(dims)}")
        chol = tuple(check_spd(c, f"covariance of chain {i + 1}") for i, c in enumerate(covs))
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "cholesky", chol)

    @classmethod
    def from_precisions(cls, precisions) -> "MvnConfig":
        covs = []
        for a in precisions:
            check_spd(a, "precision")
            cov = np.linalg.inv(a)
            covs.append(0.5 * (cov + cov.T))
        return cls(tuple(covs))

    @property
    def dim(self) -> int:
        return self.covariances[0].shape[0]


def gen_mvn(cfg: MvnConfig, n_iter: int, seed: int = 0) -> ChainSet:
    """Independent draws ``x = mu + L z`` with each chain's Cholesky factor."""
    out = np.empty((len(cfg.cholesky), n_iter, cfg.dim))
    for n, (chol, rng) in enumerate(zip(cfg.cholesky, chain_rngs(seed, len(cfg.cholesky)))):
        out[n] = rng.standard_normal((n_iter, cfg.dim)) @ chol.T
        if cfg.means is not None:
            out[n] += np.asarray(cfg.means[n], dtype=float)
    return ChainSet(out)


def gen_wishart_precision(dim: int, dof: float, seed: int = 0) -> np.ndarray:
    """Wishart(identity, dof) matrix via the Bartlett decomposition."""
    if dof < dim:
        raise ValueError(f"dof={dof} < dim={dim} gives a singular matrix")
    rng = np.random.default_rng(seed)
    g = np.zeros((dim, dim))
    g[np.diag_indices(dim)] = np.sqrt(rng.chisquare(dof - np.arange(dim)))
    rows, cols = np.tril_indices(dim, -1)
    g[rows, cols] = rng.standard_normal(len(rows))
    a = g @ g.T
    return 0.5 * (a + a.T)


def cov_to_corr(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def gen_cauchy(dim: int, n_iter: int, n_chains: int = 4, param: str = "nominal",
               seed: int = 0) -> ChainSet:
    """Standard Cauchy draws, directly or as ``a / sqrt(b)`` with ``b ~ Gamma(1/2, rate 1/2)``."""
    if param not in ("nominal", "alternative"):
        raise ValueError(f"param must be 'nominal' or 'alternative', got {param!r}")
    out = np.empty((n_chains, n_iter, dim))
    for n, rng in enumerate(chain_rngs(seed, n_chains)):
        if param == "nominal":
            out[n] = rng.standard_cauchy((n_iter, dim))
        else:
            a = rng.standard_normal((n_iter, dim))
            b = rng.gamma(0.5, 2.0, (n_iter, dim))
            out[n] = a / np.sqrt(b)
    return ChainSet(out)


@dataclass(frozen=True)
class TransitionMatrix:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("transition matrix has negative entries")
        bad = np.flatnonzero(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL)
        if len(bad):
            raise ValueError(f"rows {[int(i) + 1 for i in bad]} do not sum to 1")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def n_states(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_fractions(cls, rows) -> "TransitionMatrix":
        return cls(np.array([[float(Fraction(v)) for v in r] for r in rows]))


_P_TOP = [["0", "1/2", "1/2", "0"], ["1/2", "0", "1/3", "1/6"]]
P1 = TransitionMatrix.from_fractions(_P_TOP + [["1/4"] * 4, ["0", "1", "0", "0"]])
P2 = TransitionMatrix.from_fractions(_P_TOP + [["5/8", "1/8", "1/8", "1/8"], ["1/2", "1/2", "0", "0"]])
P3 = TransitionMatrix.from_fractions(_P_TOP + [["1", "0", "0", "0"], ["1", "0", "0", "0"]])


def dirichlet_matrix(n_states: int, seed: int) -> TransitionMatrix:
    """Rows drawn i.i.d. from Dirichlet(1, ..., 1)."""
    p = np.random.default_rng(seed).dirichlet(np.ones(n_states), size=n_states)
    return TransitionMatrix(p / p.sum(axis=1, keepdims=True))


@numba.njit(cache=True)
def _walk(cum, u, x0):
    out = np.empty(len(u), dtype=np.int64)
    state = x0
    last = cum.shape[1] - 1
    for t in range(len(u)):
        j = 0
        while j < last and u[t] >= cum[state, j]:
            j += 1
        state = j
        out[t] = state
    return out


def gen_discrete_markov(matrices: Sequence[TransitionMatrix], n_iter: int, x0: int = 1,
                        seed: int = 0) -> ChainSet:
    """One Markov chain per matrix started from state ``x0``; states 1..D emitted as floats.

    The initial state is not emitted: the first draw is the state after one transition.
    """
    matrices = [m if isinstance(m, TransitionMatrix) else TransitionMatrix(m) for m in matrices]
    sizes = {m.n_states for m in matrices}
    if len(sizes) != 1:
        raise ValueError(f"transition matrices disagree on state count: {sorted(sizes)}")
    if not 1 <= x0 <= sizes.pop():
        raise ValueError(f"initial state {x0} out of range")
    out = np.empty((len(matrices), n_iter))
    for n, (m, rng) in enumerate(zip(matrices, chain_rngs(seed, len(matrices)))):
        cum = np.cumsum(m.p, axis=1)
        out[n] = _walk(cum, rng.random(n_iter), x0 - 1) + 1
    return ChainSet(out)


def trend_offsets(n_iter: int, trend: float) -> np.ndarray:
    """``trend * (2 s / S - 1)`` for ``s = 1..S``."""
    return trend * (2.0 * np.arange(1, n_iter + 1) / n_iter - 1.0)


def gen_trending(base: ChainSet, trend: float, dims: Sequence[int] | None = None,
                 mode: str | Sequence[float] = "all_chains") -> ChainSet:
    """Add a centered linear drift to the selected (0-based) ``dims``.

    ``mode`` is ``"all_chains"`` for a common trend, or a per-chain list of trend values.
    """
    n, s, k = base.shape
    dims = list(range(k)) if dims is None else list(dims)
    if mode == "all_chains":
        trends = [trend] * n
    else:
        trends = [float(t) for t in mode]
        if len(trends) != n:
            raise ValueError(f"{len(trends)} per-chain trends for {n} chains")
    draws = base.draws.copy()
    for c, t in enumerate(trends):
        draws[c][:, dims] += trend_offsets(s, t)[:, None]
    return base.replace(draws)


def trending_correlations(rho_max: float, n_iter: int) -> np.ndarray:
    return -rho_max + 2.0 * rho_max * np.arange(n_iter) / max(n_iter - 1, 1)


def gen_trending_correlation(rho_max: float, n_iter: int, n_chains: int = 4,
                             seed: int = 0) -> ChainSet:
    """Bivariate unit-marginal normals whose correlation rises linearly from -rho_max to rho_max."""
    if not 0.0 <= rho_max < 1.0:
        raise ValueError("rho_max must lie in [0, 1)")
    rho = trending_correlations(rho_max, n_iter)
    out = np.empty((n_chains, n_iter, 2))
    for n, rng in enumerate(chain_rngs(seed, n_chains)):
        z = rng.standard_normal((n_iter, 2))
        out[n, :, 0] = z[:, 0]
        out[n, :, 1] = rho * z[:, 0] + np.sqrt(1.0 - rho**2) * z[:, 1]
    return ChainSet(out)


@dataclass(frozen=True)
class StudentTConfig:
    """Multivariate Student-t with covariance ``nu / (nu - 2) * shape`` when ``nu > 2``."""

    nu: float
    shape: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        shape = np.atleast_2d(np.asarray(self.shape, dtype=float))
        check_spd(shape, "shape matrix")
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self) -> int:
        return self.shape.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        if self.nu <= 2:
            raise ValueError(f"covariance undefined for nu={self.nu}")
        return self.nu / (self.nu - 2) * self.shape


def student_t_draws(cfg: StudentTConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    chol = check_spd(cfg.shape)
    z = rng.standard_normal((n, cfg.dim))
    w = rng.chisquare(cfg.nu, n)
    x = (z @ chol.T) * np.sqrt(cfg.nu / w)[:, None]
    return x if cfg.mean is None else x + cfg.mean


def gen_student_t(cfgs: StudentTConfig | Sequence[StudentTConfig], n_iter: int,
                  seed: int = 0, n_chains: int = 4) -> ChainSet:
    """Independent multivariate-t draws, one config per chain (or one shared config)."""
    if isinstance(cfgs, StudentTConfig):
        cfgs = [cfgs] * n_chains
    dims = {c.dim for c in cfgs}
    if len(dims) != 1:
        raise ValueError(f"chains disagree on dimension: {sorted(dims)}")
    return ChainSet(np.stack([student_t_draws(c, n_iter, rng)
                              for c, rng in zip(cfgs, chain_rngs(seed, len(cfgs)))]))


def gen_lkj(dim: int, eta: float = 1.0, seed: int = 0) -> np.ndarray:
    """LKJ(eta) correlation matrix by the onion method."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    rng = np.random.default_rng(seed)
    corr = np.ones((1, 1))
    if dim == 1:
        return corr
    beta = eta + (dim - 2) / 2.0
    r12 = 2.0 * rng.beta(beta, beta) - 1.0
    corr = np.array([[1.0, r12], [r12, 1.0]])
    for k in range(2, dim):
        beta -= 0.5
        y = rng.beta(k / 2.0, beta)
        u = rng.standard_normal(k)
        u /= np.linalg.norm(u)
        w = np.sqrt(y) * u
        q = np.linalg.cholesky(corr) @ w
        corr = np.block([[corr, q[:, None]], [q[None, :], np.ones((1, 1))]])
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def leading_block(mat: np.ndarray, d: int) -> np.ndarray:
    return np.array(mat[:d, :d])
