"""Replicated preset experiments: generate, diagnose, record one row per replicate."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import SUMMARY_QUANTILES, compute_rstar
from .diagnostics import diagnose
from .oracles import bayes_optimal_rstar
from .presets import get_preset

SCHEMA_VERSION = 1
COLUMNS = ("replicate", "seed", "r_star_gbm", "r_star_rf", "max_rank_rhat", "min_bulk_ess",
           "min_tail_ess", "optimal_rstar")
CLASSIFIER_CHOICES = {"gbm": ("gbm",), "rf": ("rf",), "both": ("gbm", "rf")}


@dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    params: dict = field(default_factory=dict)
    replicates: int = 10
    seed: int = 0
    classifier: str = "gbm"
    split: int = 2
    optimal_mc: int = 10000

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.classifier not in CLASSIFIER_CHOICES:
            raise ValueError(f"classifier must be one of {sorted(CLASSIFIER_CHOICES)}")
        if self.split < 1:
            raise ValueError("split must be >= 1")
        # resolve now so unknown presets or parameters fail before any work
        object.__setattr__(self, "params", get_preset(self.preset).resolve(self.params))

    def replicate_seeds(self) -> list[int]:
        return [int(v) for v in np.random.SeedSequence(self.seed).generate_state(self.replicates)]

    def to_dict(self) -> dict:
        return asdict(self)


def run_replicate(spec: ExperimentSpec, replicate: int, seed: int) -> dict:
    preset = get_preset(spec.preset)
    cs = preset.generate(spec.params, seed)
    row = {"replicate": replicate, "seed": seed, "r_star_gbm": None, "r_star_rf": None,
           "optimal_rstar": None}
    for kind in CLASSIFIER_CHOICES[spec.classifier]:
        row[f"r_star_{kind}"] = compute_rstar(cs, kind, split=spec.split, seed=seed).r_star
    report = diagnose(cs, multivariate=False)
    row.update(max_rank_rhat=report.max_rank_rhat, min_bulk_ess=report.min_bulk_ess,
               min_tail_ess=report.min_tail_ess)
    densities = preset.optimal_densities(spec.params)
    if densities is not None:
        row["optimal_rstar"] = bayes_optimal_rstar(densities, spec.optimal_mc, seed).r_star
    return row


def _task(args):
    return run_replicate(*args)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[dict]:
    """Rows ordered by replicate index whatever the completion order."""
    tasks = [(spec, i + 1, s) for i, s in enumerate(spec.replicate_seeds())]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([format_value(r[c]) for c in COLUMNS])


def summarize_rows(rows: list[dict]) -> dict:
    out = {}
    for col in COLUMNS[2:]:
        vals = np.array([r[col] for r in rows if r[col] is not None], dtype=float)
        if len(vals) == 0:
            continue
        qs = np.quantile(vals, SUMMARY_QUANTILES)
        out[col] = {"n": int(len(vals)), "mean": float(vals.mean()),
                    **{f"q{100 * p:g}": float(q) for p, q in zip(SUMMARY_QUANTILES, qs)}}
    for kind in ("gbm", "rf"):
        col = f"r_star_{kind}"
        if col in out:
            vals = np.array([r[col] for r in rows if r[col] is not None])
            out[col]["frac_above_1"] = float(np.mean(vals > 1))
    return out


def jsonable(obj):
    """Replace non-finite floats (not valid JSON) with strings, recursively."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n")


def write_experiment(spec: ExperimentSpec, rows: list[dict], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_rows(rows, out / "replicates.csv")
    dump_json({"schema_version": SCHEMA_VERSION, "spec": spec.to_dict(),
               "summary": summarize_rows(rows)}, out / "summary.json")
