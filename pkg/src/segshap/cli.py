"""Command line entry point.

Exit codes: 0 success, 1 fatal configuration or data error, 2 completed
with skipped records.
"""

from __future__ import annotations

import json
import logging
import os
import sys

import click

from . import runner
from .attribution import NORMALIZED, REPLICATED, expand, make_background, shapley_sampling
from .core import compute_channel_stats, load_dataset, serialize_ts, synth_bump_dataset
from .errors import SegshapError
from .evaluation import STRATEGIES, EvalConfig, aucd, interpret_time
from .model import BUILTINS, build_classifier
from .segmentation import METHODS, SegmentationConfig, segment

EXIT_FATAL = 1
EXIT_SKIPS = 2


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_FATAL)


def _write_text(path, text):
    if path in (None, "-"):
        click.echo(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _seg_config(method, n_segments, period, window):
    params = {}
    if period is not None:
        params["period"] = period
    if window is not None:
        params["window"] = window
    return SegmentationConfig(method, n_segments, params)


seg_options = [
    click.option("--segmentation", "--method", "method", type=click.Choice(METHODS), default="equal",
                 show_default=True),
    click.option("--n-segments", type=int, default=10, show_default=True),
    click.option("--period", type=int, default=None, help="ClaSP window length."),
    click.option("--window", type=int, default=None, help="NNSegment window length."),
]


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Segment-based SHAP attributions for time series classifiers."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("segment")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--channels", type=int, default=1, show_default=True, help="Channels for CSV input.")
@click.option("--instance", type=int, default=None, help="Segment only this instance.")
@_apply(seg_options)
@click.option("--out", default="-", help="Output file, '-' for stdout.")
def segment_cmd(input_path, channels, instance, method, n_segments, period, window, out):
    """Segment every instance of a dataset; writes one JSON object per line."""
    try:
        data = load_dataset(input_path, channels)
        cfg = _seg_config(method, n_segments, period, window)
        idx = range(len(data)) if instance is None else [instance]
        lines = [segment(data.X[i], cfg).to_json() for i in idx]
    except (SegshapError, OSError, ValueError, IndexError) as exc:
        _fail(exc)
    _write_text(out, "\n".join(lines))


@main.command("classifiers")
def classifiers_cmd():
    """List the built-in classifiers."""
    for name, desc in BUILTINS.items():
        click.echo(f"{name}\t{desc}")
    click.echo("external:<command>\tchild process speaking line-delimited JSON")


def _explain_common(train, test, channels, classifier, seed, method, n_segments, period, window,
                    background, permutations):
    train_ds = load_dataset(train, channels, role="train")
    test_ds = load_dataset(test, channels, role="test").with_classes(train_ds.class_names)
    model = build_classifier(classifier, train_ds, seed=seed)
    cfg = _seg_config(method, n_segments, period, window)
    bg = make_background(background, train_ds)
    return train_ds, test_ds, model, cfg, bg


explain_options = [
    click.option("--train", required=True, type=click.Path(dir_okay=False)),
    click.option("--test", required=True, type=click.Path(dir_okay=False)),
    click.option("--channels", type=int, default=1, show_default=True),
    click.option("--classifier", default="nearest_centroid", show_default=True),
    *seg_options,
    click.option("--background", type=click.Choice(["zero", "average"]), default="average",
                 show_default=True),
    click.option("--normalize/--no-normalize", default=True, show_default=True),
    click.option("--permutations", type=int, default=25, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--max-instances", type=int, default=None),
    click.option("--out", default="-"),
]


@main.command("explain")
@_apply(explain_options)
def explain_cmd(train, test, channels, classifier, method, n_segments, period, window,
                background, normalize, permutations, seed, max_instances, out):
    """Attribute test instances; writes one JSON object per line."""
    mode = NORMALIZED if normalize else REPLICATED
    try:
        _, test_ds, model, cfg, bg = _explain_common(
            train, test, channels, classifier, seed, method, n_segments, period, window,
            background, permutations)
        n = len(test_ds) if max_instances is None else min(max_instances, len(test_ds))
        lines = []
        for i in range(n):
            x = test_ds.X[i]
            attr = shapley_sampling(model, x, segment(x, cfg), bg, m=permutations,
                                    seed=runner.derive_seed(seed, "shap", i))
            lines.append(json.dumps({"instance": i, **expand(attr, mode).to_dict()}))
    except (SegshapError, OSError, ValueError) as exc:
        _fail(exc)
    _write_text(out, "\n".join(lines))


@main.command("evaluate")
@_apply(explain_options)
@click.option("--metric", type=click.Choice(["interprettime", "aucd"]), default="interprettime",
              show_default=True)
@click.option("--perturbation", type=click.Choice(STRATEGIES), default="normal", show_default=True)
def evaluate_cmd(train, test, channels, classifier, method, n_segments, period, window,
                 background, normalize, permutations, seed, max_instances, out, metric, perturbation):
    """Attribute and score test instances; one JSON result per line."""
    mode = NORMALIZED if normalize else REPLICATED
    skipped = 0
    try:
        train_ds, test_ds, model, cfg, bg = _explain_common(
            train, test, channels, classifier, seed, method, n_segments, period, window,
            background, permutations)
        stats = compute_channel_stats(train_ds)
        n = len(test_ds) if max_instances is None else min(max_instances, len(test_ds))
        lines = []
        for i in range(n):
            x = test_ds.X[i]
            attr = shapley_sampling(model, x, segment(x, cfg), bg, m=permutations,
                                    seed=runner.derive_seed(seed, "shap", i))
            tp = expand(attr, mode)
            head = {"instance": i, "metric": metric,
                    "strategy": perturbation if metric == "interprettime" else "-"}
            try:
                if metric == "interprettime":
                    ev = EvalConfig(seed=runner.derive_seed(seed, "eval", perturbation, i))
                    res = interpret_time(model, x, tp, perturbation, stats, ev).to_dict()
                else:
                    res = aucd(model, x, tp, train_ds).to_dict()
            except SegshapError as exc:
                skipped += 1
                res = {"skip_reason": runner._skip_reason(exc, "evaluation")}
            lines.append(json.dumps({**head, **res}))
    except (SegshapError, OSError, ValueError) as exc:
        _fail(exc)
    _write_text(out, "\n".join(lines))
    if skipped:
        sys.exit(EXIT_SKIPS)


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", default=None, help="Output directory (overrides out_dir).")
def run_cmd(config_path, out_dir):
    """Run an experiment grid; writes records.csv and metadata.json."""
    try:
        cfg = runner.load_config(config_path)
        meta = runner.run_to_directory(cfg, out_dir)
    except SegshapError as exc:
        _fail(exc)
    click.echo(f"{meta['n_records']} records, {meta['n_skipped']} skipped")
    if meta["n_skipped"]:
        sys.exit(EXIT_SKIPS)


@main.command("aggregate")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--group-by", default="dataset,classifier", show_default=True,
              help="Comma-separated factors.")
@click.option("--out", default="-")
def aggregate_cmd(input_path, group_by, out):
    """Mean, std and count per group and metric."""
    try:
        records = runner.read_records_csv(input_path)
        factors = [g.strip() for g in group_by.split(",") if g.strip()]
        rows = runner.aggregate(records, factors)
    except (SegshapError, OSError, ValueError) as exc:
        _fail(exc)
    _emit_aggregates(rows, out)


def _emit_aggregates(rows, out):
    if out in (None, "-"):
        runner.write_aggregates_csv(rows, sys.stdout)
    else:
        runner.write_aggregates_csv(rows, out)


@main.command("report")
@click.option("--kind", type=click.Choice(["normalization", "entropy"]), required=True)
@click.option("--input", "input_path", type=click.Path(dir_okay=False),
              help="records.csv (normalization report).")
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="Experiment config (entropy report).")
@click.option("--out", default="-")
def report_cmd(kind, input_path, config_path, out):
    """Normalisation deltas from records, or the segmentation entropy table."""
    try:
        if kind == "normalization":
            if not input_path:
                raise click.UsageError("--input is required for the normalization report")
            rows = runner.normalization_delta_report(runner.read_records_csv(input_path))
        else:
            if not config_path:
                raise click.UsageError("--config is required for the entropy report")
            rows = runner.entropy_report(runner.load_config(config_path))
    except (SegshapError, OSError, ValueError) as exc:
        _fail(exc)
    _emit_aggregates(rows, out)


@main.command("synth")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--name", default="bumps", show_default=True)
@click.option("--n-train", type=int, default=40, show_default=True)
@click.option("--n-test", type=int, default=20, show_default=True)
@click.option("--channels", type=int, default=1, show_default=True)
@click.option("--length", type=int, default=100, show_default=True)
@click.option("--classes", type=int, default=2, show_default=True)
@click.option("--bump-width", type=int, default=25, show_default=True)
@click.option("--noise", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synth_cmd(out_dir, name, n_train, n_test, channels, length, classes, bump_width, noise, seed):
    """Write a synthetic bump dataset as <name>_TRAIN.ts and <name>_TEST.ts."""
    try:
        sets = {
            "TRAIN": synth_bump_dataset(n_train, channels, length, classes, bump_width, noise,
                                        seed, role="train"),
            "TEST": synth_bump_dataset(n_test, channels, length, classes, bump_width, noise,
                                       seed + 1, role="test"),
        }
    except (SegshapError, ValueError) as exc:
        _fail(exc)
    os.makedirs(out_dir, exist_ok=True)
    for split, ds in sets.items():
        path = os.path.join(out_dir, f"{name}_{split}.ts")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(serialize_ts(ds, name))
        click.echo(path)


if __name__ == "__main__":
    main()
