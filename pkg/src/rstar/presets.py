"""Named experiment presets: default parameters, a generator and, when known, the chain densities.

In every preset the last chain is the odd one out; the others share a target.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import generators as g
from .chains import ChainSet
from .oracles import DensitySpec, stationary_distribution


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    defaults: dict
    build: Callable[[dict, int], ChainSet]
    densities: Callable[[dict], list[DensitySpec] | None] | None = None

    def resolve(self, overrides: dict | None = None) -> dict:
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(self.defaults))
        if unknown:
            raise KeyError(f"preset {self.name!r} has no parameters {unknown}; "
                           f"known: {sorted(self.defaults)}")
        return {**self.defaults, **overrides}

    def generate(self, params: dict, seed: int) -> ChainSet:
        return self.build(params, seed)

    def optimal_densities(self, params: dict) -> list[DensitySpec] | None:
        return None if self.densities is None else self.densities(params)


def _iid_normal(p, seed):
    return g.gen_mvn(g.MvnConfig((np.eye(p["dim"]),) * p["n_chains"]), p["n_iter"], seed)


def _ar1_sigmas(p):
    return [1.0] * (p["n_chains"] - 1) + [p["sigma_last"]]


def _ar1(p, seed):
    return g.gen_ar1(g.Ar1Config(p["rho"], tuple(_ar1_sigmas(p)), p["n_iter"]), seed)


def _ar1_densities(p):
    if abs(p["rho"]) >= 1:
        return None
    return [DensitySpec.ar1_marginal(p["rho"], s) for s in _ar1_sigmas(p)]


def _bivariate_covs(p):
    odd = np.array([[1.0, p["corr_last"]], [p["corr_last"], 1.0]])
    return [np.eye(2)] * (p["n_chains"] - 1) + [odd]


@lru_cache(maxsize=8)
def _wishart_cov(dim, dof, matrix_seed):
    cov = np.linalg.inv(g.gen_wishart_precision(dim, dof, matrix_seed))
    return 0.5 * (cov + cov.T)


@lru_cache(maxsize=8)
def lkj_pair(dim: int, eta: float, matrix_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference and odd-chain correlation matrices, drawn once per ``matrix_seed``."""
    return g.gen_lkj(dim, eta, matrix_seed), g.gen_lkj(dim, eta, matrix_seed + 1)


def _lkj_covs(p):
    ref, odd = lkj_pair(p["max_dim"], p["eta"], p["matrix_seed"])
    d = p["dim"]
    return [g.leading_block(ref, d)] * (p["n_chains"] - 1) + [g.leading_block(odd, d)]


def _student_cfgs(p):
    """Shape ``(nu - 2) / nu * A`` for each chain's own ``nu``, so all chains have covariance A."""
    a = g.leading_block(lkj_pair(p["max_dim"], 1.0, p["matrix_seed"])[0], p["dim"])
    nu0, nu = p["nu_ref"], p["nu"]
    ref = g.StudentTConfig(nu0, (nu0 - 2) / nu0 * a)
    return [ref] * (p["n_chains"] - 1) + [g.StudentTConfig(nu, (nu - 2) / nu * a)]


def _discrete_matrices(p):
    base = [g.P1] * (p["n_chains"] - 1)
    return base + [{"p1": g.P1, "p2": g.P2, "p3": g.P3}[p["last"]]]


@lru_cache(maxsize=8)
def large_matrices(n_states: int, matrix_seed: int):
    return g.dirichlet_matrix(n_states, matrix_seed), g.dirichlet_matrix(n_states, matrix_seed + 1)


def _large(p):
    ref, odd = large_matrices(p["n_states"], p["matrix_seed"])
    return [ref] * (p["n_chains"] - 1) + [odd if p["last"] == "p2" else ref]


def _discrete_densities(mats):
    return [DensitySpec.discrete(stationary_distribution(m)) for m in mats]


def _trend_mean(p, seed):
    base = _iid_normal(p, seed)
    dims = list(range(p["dim"])) if p["trend_dims"] == "all" else list(range(int(p["trend_dims"])))
    return g.gen_trending(base, p["trend"], dims)


def _small(last):
    return Preset(
        f"discrete-small-{last}", f"4-state Markov chains; last chain uses {last.upper()}",
        {"n_chains": 4, "n_iter": 10000, "last": last},
        lambda p, seed: g.gen_discrete_markov(_discrete_matrices(p), p["n_iter"], seed=seed),
        lambda p: _discrete_densities(_discrete_matrices(p)),
    )


# matrices are drawn once per matrix seed and held fixed across replicates
DISCRETE_LARGE_SEED = 0

PRESETS: dict[str, Preset] = {p.name: p for p in [
    Preset("iid-normal", "identical i.i.d. standard normal chains",
           {"n_chains": 4, "n_iter": 2000, "dim": 1}, _iid_normal,
           lambda p: [DensitySpec.mvn(np.eye(p["dim"]))] * p["n_chains"]),
    Preset("ar1-hetero", "AR(1) chains; the last has a third of the innovation SD",
           {"n_chains": 4, "n_iter": 2000, "rho": 0.3, "sigma_last": 1.0 / 3.0}, _ar1, _ar1_densities),
    Preset("ar1-persist", "identical AR(1) chains with strong persistence",
           {"n_chains": 4, "n_iter": 1000, "rho": 0.95, "sigma_last": 1.0}, _ar1, _ar1_densities),
    Preset("mvn-bivariate", "bivariate normals; the last chain is correlated",
           {"n_chains": 4, "n_iter": 2000, "corr_last": 0.9},
           lambda p, seed: g.gen_mvn(g.MvnConfig(tuple(_bivariate_covs(p))), p["n_iter"], seed),
           lambda p: [DensitySpec.mvn(c) for c in _bivariate_covs(p)]),
    Preset("mvn-wishart", "identical high-dimensional normals with a Wishart precision",
           {"n_chains": 4, "n_iter": 2000, "dim": 250, "dof": 250, "matrix_seed": 0},
           lambda p, seed: g.gen_mvn(g.MvnConfig((_wishart_cov(p["dim"], p["dof"], p["matrix_seed"]),)
                                                 * p["n_chains"]), p["n_iter"], seed)),
    Preset("cauchy-nominal", "i.i.d. standard Cauchy components",
           {"n_chains": 4, "n_iter": 2000, "dim": 50},
           lambda p, seed: g.gen_cauchy(p["dim"], p["n_iter"], p["n_chains"], "nominal", seed),
           lambda p: [DensitySpec.cauchy()] * p["n_chains"] if p["dim"] == 1 else None),
    Preset("cauchy-alt", "standard Cauchy via the normal / sqrt(gamma) mixture",
           {"n_chains": 4, "n_iter": 2000, "dim": 50},
           lambda p, seed: g.gen_cauchy(p["dim"], p["n_iter"], p["n_chains"], "alternative", seed),
           lambda p: [DensitySpec.cauchy()] * p["n_chains"] if p["dim"] == 1 else None),
    _small("p1"), _small("p2"), _small("p3"),
    Preset("discrete-large", "20-state Markov chains with Dirichlet(1) rows",
           {"n_chains": 4, "n_iter": 10000, "n_states": 20, "last": "p2",
            "matrix_seed": DISCRETE_LARGE_SEED},
           lambda p, seed: g.gen_discrete_markov(_large(p), p["n_iter"], seed=seed),
           lambda p: _discrete_densities(_large(p))),
    Preset("trend-mean", "i.i.d. normals plus a common linear trend",
           {"n_chains": 4, "n_iter": 1000, "dim": 1, "trend": 1.0, "trend_dims": "all"}, _trend_mean),
    Preset("trend-corr", "bivariate normals whose correlation drifts from -rho_max to rho_max",
           {"n_chains": 4, "n_iter": 4000, "rho_max": 0.5},
           lambda p, seed: g.gen_trending_correlation(p["rho_max"], p["n_iter"], p["n_chains"], seed)),
    Preset("studentt-tails", "multivariate t chains with equal covariance; the last has nu dof",
           {"n_chains": 4, "n_iter": 2000, "dim": 1, "max_dim": 32, "nu": 4.0, "nu_ref": 3.0,
            "matrix_seed": 0},
           lambda p, seed: g.gen_student_t(_student_cfgs(p), p["n_iter"], seed),
           lambda p: [DensitySpec.student_t(c.shape, c.nu) for c in _student_cfgs(p)]),
    Preset("lkj-joint", "normals with LKJ correlation; the last chain has its own matrix",
           {"n_chains": 4, "n_iter": 2000, "dim": 2, "max_dim": 32, "eta": 1.0, "matrix_seed": 0},
           lambda p, seed: g.gen_mvn(g.MvnConfig(tuple(_lkj_covs(p))), p["n_iter"], seed),
           lambda p: [DensitySpec.mvn(c) for c in _lkj_covs(p)]),
]}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
