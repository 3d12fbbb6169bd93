"""Command-line front end: ``rstar diagnose | simulate | experiment | presets``."""
from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .chains import ChainSetError, CsvLayout, load_csv, write_csv
from .core import compute_rstar
from .diagnostics import ESS_THRESHOLD, RHAT_THRESHOLD, diagnose
from .experiment import (CLASSIFIER_CHOICES, SCHEMA_VERSION, ExperimentSpec, dump_json,
                         format_value, run_experiment, write_experiment)
from .presets import PRESETS, get_preset

OUT_ENV = "RSTAR_OUTPUT_DIR"
RSTAR_STRICT_MEAN = 1.05


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


def parse_sets(pairs) -> dict:
    """``key=value`` pairs; values parse as JSON when they can, else stay strings."""
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected key=value, got {pair!r}", param_hint="--set")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise click.ClickException(f"cannot read config {path}: {err}") from None
    if not isinstance(doc, dict):
        raise click.ClickException(f"config {path} must hold a JSON object")
    return doc


def _given(ctx: click.Context, name: str) -> bool:
    return ctx.get_parameter_source(name) not in (click.core.ParameterSource.DEFAULT, None)


def _merged(ctx, config: dict, name: str, value):
    """Explicit flag beats config file beats flag default."""
    return value if _given(ctx, name) or name not in config else config[name]


def _preset_or_exit(name: str):
    try:
        return get_preset(name)
    except KeyError:
        click.echo(f"unknown preset {name!r}; available presets:", err=True)
        for p in sorted(PRESETS):
            click.echo(f"  {p}", err=True)
        sys.exit(1)


@click.group()
def main():
    """Chain-classifier convergence diagnostics."""


@main.command("diagnose")
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIER_CHOICES)), default="gbm", show_default=True)
@click.option("--split", type=int, default=2, show_default=True, help="Split factor; 1 disables splitting.")
@click.option("--rstar-draws", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--strict", is_flag=True, help="Exit 2 when any diagnostic breaches its threshold.")
@click.option("--rstar-threshold", type=float, default=RSTAR_STRICT_MEAN, show_default=True)
def diagnose_cmd(inputs, classifier, split, rstar_draws, seed, out, strict, rstar_threshold):
    """Diagnose draws in one long-format CSV, or one CSV per chain."""
    layout = CsvLayout("per_chain") if len(inputs) > 1 else CsvLayout("long")
    try:
        cs = load_csv(list(inputs) if len(inputs) > 1 else inputs[0], layout)
    except (OSError, ChainSetError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    out = Path(out) if out else default_out()
    out.mkdir(parents=True, exist_ok=True)

    report = diagnose(cs)
    rstar_blocks, draw_rows = {}, []
    for kind in CLASSIFIER_CHOICES[classifier]:
        res = compute_rstar(cs, kind, split=split, seed=seed, draws=rstar_draws)
        rstar_blocks[kind] = res.to_dict()
        if res.uncertainty_draws is not None:
            draw_rows += [(kind, i + 1, v) for i, v in enumerate(res.uncertainty_draws)]

    breaches = []
    for kind, block in rstar_blocks.items():
        centre = block["draws_summary"]["mean"] if "draws_summary" in block else block["r_star"]
        if centre > rstar_threshold:
            breaches.append(f"R* ({kind}) mean {centre:.4f} > {rstar_threshold}")
    for p in report.per_param:
        if not p.rank_rhat <= RHAT_THRESHOLD:
            breaches.append(f"rank R-hat of {p.name} {p.rank_rhat:.4f} > {RHAT_THRESHOLD}")
        for label, v in (("bulk", p.bulk_ess), ("tail", p.tail_ess)):
            if v < ESS_THRESHOLD:
                breaches.append(f"{label} ESS of {p.name} {v:.1f} < {ESS_THRESHOLD}")

    doc = {
        "schema_version": SCHEMA_VERSION,
        "input": {"files": [Path(i).name for i in inputs], "n_chains": cs.n_chains,
                  "n_iter": cs.n_iter, "params": list(cs.param_names)},
        "settings": {"classifier": classifier, "split": split, "rstar_draws": rstar_draws, "seed": seed},
        "rstar": rstar_blocks,
        "diagnostics": report.to_dict(),
        "thresholds": {"rstar_mean": rstar_threshold, "rank_rhat": RHAT_THRESHOLD, "ess": ESS_THRESHOLD},
        "breaches": breaches,
    }
    dump_json(doc, out / "report.json")
    with open(out / "rstar_draws.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["classifier", "draw", "r_star"])
        w.writerows((k, i, format_value(float(v))) for k, i, v in draw_rows)

    for kind, block in rstar_blocks.items():
        click.echo(f"R* ({kind}): {block['r_star']:.4f}")
    click.echo(f"max rank R-hat: {report.max_rank_rhat:.4f}; min bulk ESS: {report.min_bulk_ess:.0f}; "
               f"min tail ESS: {report.min_tail_ess:.0f}")
    for b in breaches:
        click.echo(f"breach: {b}")
    if strict and breaches:
        sys.exit(2)


@main.command("simulate")
@click.argument("preset")
@click.option("--set", "sets", multiple=True, help="Override a preset parameter, key=value.")
@click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON file of parameters.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def simulate_cmd(preset, sets, config, seed, out):
    """Generate draws from a named preset and write them as CSV."""
    p = _preset_or_exit(preset)
    cfg = load_config(config)
    overrides = {**cfg.get("params", {}), **parse_sets(sets)}
    try:
        params = p.resolve(overrides)
        cs = p.generate(params, seed)
    except (KeyError, ValueError) as err:
        raise click.ClickException(str(err).strip("'\"")) from None
    out = Path(out) if out else default_out()
    out.mkdir(parents=True, exist_ok=True)
    write_csv(cs, out / "draws.csv")
    resolved = {"preset": preset, "params": params, "seed": seed}
    dump_json(resolved, out / "config.json")
    click.echo(json.dumps(resolved, sort_keys=True))


@main.command("experiment")
@click.argument("preset", required=False)
@click.option("--set", "sets", multiple=True, help="Override a preset parameter, key=value.")
@click.option("--config", type=click.Path(dir_okay=False), default=None,
              help="JSON with preset, params, replicates, seed, classifier, split.")
@click.option("--replicates", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--classifier", type=click.Choice(sorted(CLASSIFIER_CHOICES)), default="gbm", show_default=True)
@click.option("--split", type=int, default=2, show_default=True)
@click.option("--optimal-mc", type=int, default=10000, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.pass_context
def experiment_cmd(ctx, preset, sets, config, replicates, seed, classifier, split, optimal_mc, jobs, out):
    """Run a preset over replicates; write replicates.csv and summary.json."""
    cfg = load_config(config)
    preset = preset or cfg.get("preset")
    if preset is None:
        raise click.UsageError("give a PRESET argument or a config with a 'preset' key")
    _preset_or_exit(preset)
    try:
        spec = ExperimentSpec(
            preset, {**cfg.get("params", {}), **parse_sets(sets)},
            replicates=_merged(ctx, cfg, "replicates", replicates),
            seed=_merged(ctx, cfg, "seed", seed),
            classifier=_merged(ctx, cfg, "classifier", classifier),
            split=_merged(ctx, cfg, "split", split),
            optimal_mc=_merged(ctx, cfg, "optimal_mc", optimal_mc),
        )
    except (KeyError, ValueError) as err:
        raise click.ClickException(str(err).strip("'\"")) from None
    rows = run_experiment(spec, jobs=jobs)
    out = Path(out) if out else default_out()
    write_experiment(spec, rows, out)
    for kind in CLASSIFIER_CHOICES[spec.classifier]:
        vals = np.array([r[f"r_star_{kind}"] for r in rows])
        click.echo(f"{kind}: median R* {np.median(vals):.4f}, {np.sum(vals > 1)}/{len(vals)} above 1")


@main.command("presets")
def presets_cmd():
    """List presets with their default parameters."""
    for name in sorted(PRESETS):
        p = PRESETS[name]
        click.echo(f"{name}: {p.description}")
        click.echo(f"    {json.dumps(p.defaults, sort_keys=True)}")


if __name__ == "__main__":
    main()
