"""Run the replicated preset studies and write one directory of CSV/JSON per study.

    python3 scripts/run_studies.py --out results            # every study
    python3 scripts/run_studies.py --only ar1_hetero null   # a subset
    python3 scripts/run_studies.py --quick                  # 3 replicates each, for smoke runs

Each directory holds replicates.csv and summary.json as written by
``rstar experiment``; see REPRODUCTION.md for the column meanings.
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from rstar.experiment import ExperimentSpec, run_experiment, write_experiment

# name -> list of (subdirectory, spec kwargs)
STUDIES: dict[str, list[tuple[str, dict]]] = {
    "ar1_hetero": [("", dict(preset="ar1-hetero", replicates=100))],
    "null": [("", dict(preset="iid-normal", replicates=100))],
    "mvn_bivariate": [("", dict(preset="mvn-bivariate", replicates=20, classifier="both"))],
    "discrete_small": [(last, dict(preset=f"discrete-small-{last}", replicates=40))
                       for last in ("p1", "p2", "p3")],
    "discrete_large": [(last, dict(preset="discrete-large", params={"last": last}, replicates=40))
                       for last in ("p1", "p2")],
    "trend_mean": [(f"{dims}_split{split}", dict(preset="trend-mean", replicates=10, split=split,
                                                 params={"dim": 16 if dims == "one_of_16" else 1,
                                                         "trend_dims": 1 if dims == "one_of_16" else "all"}))
                   for dims in ("all", "one_of_16") for split in (1, 2)],
    "trend_corr": [("", dict(preset="trend-corr", replicates=10))],
    "ar1_persist": [(f"rho{rho}_S{s}", dict(preset="ar1-persist", replicates=10,
                                            params={"rho": rho, "n_iter": s}))
                    for rho in (0.8, 0.95, 1.0) for s in (250, 1000, 4000)],
    "lkj_joint": [(f"d{d}", dict(preset="lkj-joint", replicates=20, classifier="both", params={"dim": d}))
                  for d in (1, 2, 4, 8, 16, 32)],
    "studentt_tails": [(f"nu{nu:g}_d{d}", dict(preset="studentt-tails", replicates=20, classifier="both",
                                               params={"dim": d, "nu": nu}))
                       for nu in (4.0, 8.0, 16.0, 32.0) for d in (1, 2, 4, 8, 16, 32)],
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--only", nargs="*", choices=sorted(STUDIES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="3 replicates per cell")
    args = ap.parse_args()

    for name in args.only or sorted(STUDIES):
        for sub, kwargs in STUDIES[name]:
            if args.quick:
                kwargs = {**kwargs, "replicates": 3}
            spec = ExperimentSpec(seed=args.seed, **kwargs)
            start = time.perf_counter()
            rows = run_experiment(spec, jobs=args.jobs)
            out = args.out / name / sub if sub else args.out / name
            write_experiment(spec, rows, out)
            print(f"{name}/{sub or '.'}: {len(rows)} replicates in {time.perf_counter() - start:.0f}s -> {out}")


if __name__ == "__main__":
    main()
