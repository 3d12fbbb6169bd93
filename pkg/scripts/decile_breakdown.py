"""Per-decile R* for one parameter of an ingested CSV or a preset.

    python3 scripts/decile_breakdown.py --csv draws.csv --param 1
    python3 scripts/decile_breakdown.py --preset ar1-hetero

Writes deciles.csv (decile, draw, r_star).
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

from rstar.chains import load_csv
from rstar.core import compute_rstar, decile_rstar
from rstar.presets import get_preset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--csv", type=Path)
    src.add_argument("--preset")
    ap.add_argument("--param", type=int, default=1, help="1-based parameter index")
    ap.add_argument("--classifier", choices=("gbm", "rf"), default="gbm")
    ap.add_argument("--draws-per-bin", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/deciles"))
    args = ap.parse_args()

    if args.csv:
        cs = load_csv(args.csv)
    else:
        p = get_preset(args.preset)
        cs = p.generate(p.resolve(), args.seed)
    res = compute_rstar(cs, args.classifier, seed=args.seed)
    ds = res.dataset
    bins = decile_rstar(res.model, ds.x_test, ds.y_test, args.param - 1,
                        draws_per_bin=args.draws_per_bin, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "deciles.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["decile", "draw", "r_star"])
        for b, d in bins:
            w.writerows((b, i + 1, repr(float(v))) for i, v in enumerate(d))
            print(f"decile {b:2d}: mean R* {d.mean():.3f}" if len(d) else f"decile {b:2d}: empty")


if __name__ == "__main__":
    main()
