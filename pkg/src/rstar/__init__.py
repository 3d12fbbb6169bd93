"""Classifier-based convergence diagnostics for MCMC chains."""
from .chains import ChainSet, CsvLayout, load_csv, make_labeled, split_chains, write_csv
from .core import RStarResult, compute_rstar, decile_rstar, rstar_uncertainty
from .diagnostics import bulk_ess, diagnose, multivariate_rhat, rank_rhat, split_rhat, tail_ess

__all__ = [
    "ChainSet", "CsvLayout", "load_csv", "make_labeled", "split_chains", "write_csv",
    "RStarResult", "compute_rstar", "decile_rstar", "rstar_uncertainty",
    "bulk_ess", "diagnose", "multivariate_rhat", "rank_rhat", "split_rhat", "tail_ess",
]
