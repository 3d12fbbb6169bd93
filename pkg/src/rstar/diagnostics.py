"""Rank-normalized split-R-hat, multivariate R-hat, bulk- and tail-ESS."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .chains import ChainSet, fold, rank_normalize_values, split_chains

RHAT_THRESHOLD = 1.01
ESS_THRESHOLD = 400
ESS_CAP_FACTOR = 10


class SingularCovarianceError(ValueError):
    pass


def split_rhat(chains) -> float:
    """Potential scale reduction of ``(M, L)`` draws from chains that are already split."""
    chains = np.asarray(chains, dtype=float)
    m, n = chains.shape
    if m < 2 or n < 2:
        raise ValueError(f"need >= 2 chains of >= 2 draws, got shape {chains.shape}")
    between = n * np.var(chains.mean(axis=1), ddof=1)
    within = np.mean(np.var(chains, axis=1, ddof=1))
    if within == 0.0:
        return np.inf if between > 0.0 else float(np.sqrt((n - 1) / n))
    return float(np.sqrt(((n - 1) / n * within + between / n) / within))


def rank_rhat(cs: ChainSet, k: int = 0) -> float:
    """Max of rank-normalized split-R-hat and its folded counterpart for parameter ``k``.

    Chains are split in two here; do not pass pre-split chains.
    """
    draws = split_chains(cs, 2).param(k)
    bulk = split_rhat(rank_normalize_values(draws))
    tail = split_rhat(rank_normalize_values(fold(draws)))
    return max(bulk, tail)


def multivariate_rhat(cs: ChainSet) -> float:
    """Largest-eigenvalue multivariate R-hat over all parameters of split chains."""
    draws = split_chains(cs, 2).draws
    m, n, k = draws.shape
    if n <= k:
        raise SingularCovarianceError(
            f"{n} draws per split chain cannot estimate a {k}x{k} covariance; subset parameters")
    within = np.mean([np.cov(c, rowvar=False, ddof=1).reshape(k, k) for c in draws], axis=0)
    between_over_n = np.cov(draws.mean(axis=1), rowvar=False, ddof=1).reshape(k, k)
    within = 0.5 * (within + within.T)
    between_over_n = 0.5 * (between_over_n + between_over_n.T)
    try:
        lam = linalg.eigh(between_over_n, within, eigvals_only=True)[-1]
    except linalg.LinAlgError:
        raise SingularCovarianceError(
            "within-chain covariance is singular; subset or thin the parameters") from None
    return float((n - 1) / n + (m + 1) / m * max(lam, 0.0))


def _autocov(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of each row, via zero-padded FFT."""
    n = x.shape[-1]
    centered = x - x.mean(axis=-1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(centered, size)
    return np.fft.irfft(spec * np.conj(spec), size)[..., :n] / n


@dataclass(frozen=True)
class EssEstimate:
    value: float
    flag: str | None = None


def ess(chains) -> EssEstimate:
    """Multi-chain ESS with Geyer's initial positive then monotone sequence truncation."""
    chains = np.asarray(chains, dtype=float)
    m, n = chains.shape
    total = m * n
    if np.ptp(chains) == 0.0:
        return EssEstimate(float(total), "constant")
    acov = _autocov(chains)
    within = acov[:, 0].mean() * n / (n - 1)
    var_plus = within * (n - 1) / n
    if m > 1:
        var_plus += np.var(chains.mean(axis=1), ddof=1)
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0

    # initial positive sequence over pairs (rho[2t], rho[2t+1])
    pairs = []
    t = 0
    while t + 1 < n:
        p = rho[t] + rho[t + 1]
        if p < 0.0:
            break
        pairs.append(p)
        t += 2
    pairs = np.minimum.accumulate(np.asarray(pairs)) if pairs else np.zeros(1)
    tau = -1.0 + 2.0 * pairs.sum()
    cap = ESS_CAP_FACTOR * total
    if tau <= total / cap:
        return EssEstimate(float(cap), "cap")
    return EssEstimate(float(total / tau))


def _bulk(draws: np.ndarray) -> EssEstimate:
    if np.ptp(draws) == 0.0:
        return EssEstimate(float(draws.size), "constant")
    return ess(rank_normalize_values(draws))


def _tail(draws: np.ndarray) -> EssEstimate:
    q05, q95 = np.quantile(draws, [0.05, 0.95])
    lower = ess((draws <= q05).astype(float))
    upper = ess((draws >= q95).astype(float))
    return min(lower, upper, key=lambda e: e.value)


def bulk_ess(cs: ChainSet, k: int = 0) -> float:
    """ESS of rank-normalized split chains; ``S * N`` when the parameter is constant."""
    return _bulk(split_chains(cs, 2).param(k)).value


def tail_ess(cs: ChainSet, k: int = 0) -> float:
    """Minimum ESS of the 5% and 95% exceedance indicators of split chains."""
    return _tail(split_chains(cs, 2).param(k)).value


@dataclass(frozen=True)
class ParamDiagnostics:
    name: str
    rank_rhat: float
    bulk_ess: float
    tail_ess: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class DiagnosticsReport:
    per_param: list[ParamDiagnostics]
    multivariate_rhat: float | None
    notes: list[str] = field(default_factory=list)

    @property
    def max_rank_rhat(self) -> float:
        return max(p.rank_rhat for p in self.per_param)

    @property
    def min_bulk_ess(self) -> float:
        return min(p.bulk_ess for p in self.per_param)

    @property
    def min_tail_ess(self) -> float:
        return min(p.tail_ess for p in self.per_param)

    def to_dict(self) -> dict:
        return {
            "per_param": [
                {"name": p.name, "rank_rhat": p.rank_rhat, "bulk_ess": p.bulk_ess,
                 "tail_ess": p.tail_ess, "flags": list(p.flags)}
                for p in self.per_param
            ],
            "multivariate_rhat": self.multivariate_rhat,
            "notes": list(self.notes),
        }


def diagnose(cs: ChainSet, multivariate: bool = True) -> DiagnosticsReport:
    split = split_chains(cs, 2)
    params = []
    for k, name in enumerate(cs.param_names):
        draws = split.param(k)
        bulk, tail = _bulk(draws), _tail(draws)
        flags = tuple(f"{kind}_ess_{e.flag}" for kind, e in (("bulk", bulk), ("tail", tail)) if e.flag)
        params.append(ParamDiagnostics(name, rank_rhat(cs, k), bulk.value, tail.value, flags))
    notes, mv = [], None
    if multivariate:
        try:
            mv = multivariate_rhat(cs)
        except SingularCovarianceError as err:
            notes.append(f"multivariate R-hat skipped: {err}")
    return DiagnosticsReport(params, mv, notes)
