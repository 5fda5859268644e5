"""Experiment grid execution, result records and aggregate reports.

Randomness is keyed, not sequential: every SHAP run and every stochastic
evaluation draws its seed from ``SeedSequence(master, spawn_key=keys)`` where
``keys`` are CRC32 hashes of the grid-cell names (dataset, classifier,
segmentation, background, [perturbation], instance).  Adding or reordering
factors therefore leaves other cells' randomness untouched, and the two
normalisation arms of a cell share both their SHAP values and their
perturbation noise.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .attribution import NORMALIZED, REPLICATED, expand, make_background, shapley_sampling
from .core import LabeledDataset, compute_channel_stats, load_dataset
from .errors import (
    ConfigInvalid,
    DatasetLoadError,
    EmptyAfterFiltering,
    SegshapError,
    UnpairedRecords,
    ZeroBaseProbability,
)
from .evaluation import STRATEGIES, EvalConfig, aucd, interpret_time, opposite_class_representative
from .model import build_classifier
from .segmentation import METHODS, SegmentationConfig, normalized_entropy, segment

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

CSV_HEADER = (
    "dataset", "classifier", "segmentation", "background", "normalization",
    "perturbation", "metric", "instance", "value", "skip_reason",
)
FACTORS = CSV_HEADER[:6]
BACKGROUNDS = ("zero", "average")
NORMALIZATIONS = (REPLICATED, NORMALIZED)
METRICS = ("interprettime", "aucd")
# statistics recorded per metric
METRIC_STATS = {"interprettime": ("aucse", "f_score"), "aucd": ("aucd",)}
NO_PERTURBATION = "-"


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    train: str
    test: str
    channels: int = 1


@dataclass
class ExperimentConfig:
    datasets: list
    classifiers: list
    segmentations: list
    backgrounds: list = field(default_factory=lambda: ["zero", "average"])
    normalization: list = field(default_factory=lambda: [REPLICATED, NORMALIZED])
    metrics: list = field(default_factory=lambda: ["interprettime", "aucd"])
    perturbations: list = field(default_factory=lambda: ["normal"])
    shap_permutations: int = 25
    seed: int = 0
    max_instances: int = 50
    out_dir: str = "segshap_out"
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    minirocket: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("datasets", "classifiers", "segmentations", "backgrounds",
                     "normalization", "metrics"):
            if not getattr(self, name):
                raise ConfigInvalid(f"factor list {name!r} is empty")
        if "interprettime" in self.metrics and not self.perturbations:
            raise ConfigInvalid("interprettime needs at least one perturbation")
        _check_members("backgrounds", self.backgrounds, BACKGROUNDS)
        _check_members("normalization", self.normalization, NORMALIZATIONS)
        _check_members("metrics", self.metrics, METRICS)
        _check_members("perturbations", self.perturbations, STRATEGIES)
        for name in ("datasets", "classifiers", "backgrounds", "normalization",
                     "metrics", "perturbations"):
            values = getattr(self, name)
            labels = [v.name if isinstance(v, DatasetSpec) else v for v in values]
            if len(set(labels)) != len(labels):
                raise ConfigInvalid(f"duplicate entries in {name!r}")
        labels = [s.label for s in self.segmentations]
        if len(set(labels)) != len(labels):
            raise ConfigInvalid("segmentations need unique names; add name = \"...\"")
        for c in self.classifiers:
            if c not in ("nearest_centroid", "minirocket") and not c.startswith("external:"):
                raise ConfigInvalid(f"unknown classifier {c!r}")
        if self.shap_permutations < 1:
            raise ConfigInvalid("shap_permutations must be >= 1")
        if self.max_instances < 1:
            raise ConfigInvalid("max_instances must be >= 1")

    @property
    def active_perturbations(self) -> list:
        return list(self.perturbations) if "interprettime" in self.metrics else []

    def grid_size(self) -> int:
        """Number of (dataset, classifier, segmentation, background,
        normalization, metric/perturbation) cells."""
        metric_cells = len(self.active_perturbations) + ("aucd" in self.metrics)
        return (len(self.datasets) * len(self.classifiers) * len(self.segmentations)
                * len(self.backgrounds) * len(self.normalization) * metric_cells)

    def to_dict(self) -> dict:
        return {
            "datasets": [asdict(d) for d in self.datasets],
            "classifiers": list(self.classifiers),
            "segmentations": [
                {"method": s.method, "n_segments": s.n_segments, "name": s.label, **s.params}
                for s in self.segmentations
            ],
            "backgrounds": list(self.backgrounds),
            "normalization": list(self.normalization),
            "metrics": list(self.metrics),
            "perturbations": list(self.perturbations),
            "shap_permutations": self.shap_permutations,
            "seed": self.seed,
            "max_instances": self.max_instances,
            "out_dir": self.out_dir,
            "evaluation": asdict(self.evaluation),
            "minirocket": dict(self.minirocket),
        }


def _check_members(name, values, allowed):
    bad = [v for v in values if v not in allowed]
    if bad:
        raise ConfigInvalid(f"{name}: unsupported {bad}; choose from {list(allowed)}")


def config_from_dict(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    raw = dict(raw)
    try:
        ds_raw = raw.pop("datasets")
        datasets = []
        for name, spec in ds_raw.items():
            datasets.append(DatasetSpec(
                name=name,
                train=os.path.join(base_dir, spec["train"]),
                test=os.path.join(base_dir, spec["test"]),
                channels=int(spec.get("channels", 1)),
            ))
        segs = []
        for s in raw.pop("segmentations"):
            s = dict(s)
            method = s.pop("method")
            n = int(s.pop("n_segments", 10))
            name = s.pop("name", None)
            segs.append(SegmentationConfig(method, n, s, name))
        ev = raw.pop("evaluation", {})
        if "k_schedule" in ev:
            ev["k_schedule"] = tuple(ev["k_schedule"])
        evaluation = EvalConfig(**ev)
        return ExperimentConfig(datasets=datasets, segmentations=segs, evaluation=evaluation, **raw)
    except ConfigInvalid:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigInvalid(f"invalid experiment config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"malformed TOML in {path}: {exc}") from exc
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def derive_seed(master: int, *keys) -> int:
    spawn = tuple(zlib.crc32(str(k).encode("utf-8")) for k in keys)
    return int(np.random.SeedSequence(master, spawn_key=spawn).generate_state(1)[0])


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    classifier: str
    segmentation: str
    background: str
    normalization: str
    perturbation: str
    metric: str
    instance: int
    value: float | None
    skip_reason: str = ""

    @property
    def skipped(self) -> bool:
        return bool(self.skip_reason)

    def row(self) -> list:
        value = "" if self.value is None else repr(float(self.value))
        return [self.dataset, self.classifier, self.segmentation, self.background,
                self.normalization, self.perturbation, self.metric, str(self.instance),
                value, self.skip_reason]


@dataclass(frozen=True)
class AggregateRecord:
    key: tuple  # ((factor, value), ...)
    metric: str
    mean: float
    std: float
    count: int
    skipped: int = 0

    def as_row(self) -> dict:
        return {**dict(self.key), "metric": self.metric, "mean": self.mean,
                "std": self.std, "count": self.count, "skipped": self.skipped}


def load_pair(spec: DatasetSpec) -> tuple[LabeledDataset, LabeledDataset]:
    try:
        train = load_dataset(spec.train, spec.channels, role="train")
        test = load_dataset(spec.test, spec.channels, role="test")
    except (OSError, SegshapError) as exc:
        raise DatasetLoadError(f"dataset {spec.name!r}: {exc}") from exc
    if (train.n_channels, train.length) != (test.n_channels, test.length):
        raise DatasetLoadError(f"dataset {spec.name!r}: train and test shapes differ")
    try:
        test = test.with_classes(train.class_names)
    except SegshapError as exc:
        raise DatasetLoadError(f"dataset {spec.name!r}: {exc}") from exc
    return train, test


def _skip_reason(exc: Exception, stage: str) -> str:
    if isinstance(exc, ZeroBaseProbability):
        return "zero_base_probability"
    return f"{stage}_error:{type(exc).__name__}"


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[ResultRecord]:
    """Run the full factor grid and return records in canonical order.

    Dataset loading failures are fatal; everything later becomes skip
    records so the grid always completes.
    """
    data = {spec.name: load_pair(spec) for spec in cfg.datasets}
    records: list[ResultRecord] = []
    perts = cfg.active_perturbations

    def emit(base, norm, metric, value_by_stat=None, reason=""):
        stats = METRIC_STATS[metric]
        pert_list = perts if metric == "interprettime" else [NO_PERTURBATION]
        for pert in pert_list:
            for stat in stats:
                val = None if reason else value_by_stat[(pert, stat)]
                records.append(ResultRecord(*base[:4], norm, pert, stat, base[4], val,
                                            reason if reason else ""))

    def emit_cell_skip(base, reason):
        for norm in cfg.normalization:
            for metric in cfg.metrics:
                emit(base, norm, metric, reason=reason)

    for spec in cfg.datasets:
        train, test = data[spec.name]
        n_eval = min(len(test), cfg.max_instances)
        stats = compute_channel_stats(train)
        for clf_name in cfg.classifiers:
            try:
                options = cfg.minirocket if clf_name == "minirocket" else {}
                model = build_classifier(clf_name, train,
                                         seed=derive_seed(cfg.seed, "classifier", spec.name, clf_name),
                                         **options)
            except Exception as exc:  # noqa: BLE001 - recorded as skips
                log.warning("classifier %s on %s failed: %s", clf_name, spec.name, exc)
                for seg_cfg in cfg.segmentations:
                    for bg in cfg.backgrounds:
                        for i in range(n_eval):
                            base = (spec.name, clf_name, seg_cfg.label, bg, i)
                            emit_cell_skip(base, _skip_reason(exc, "classifier"))
                continue
            backgrounds = {bg: make_background(bg, train) for bg in cfg.backgrounds}
            reps: dict[int, tuple] = {}
            try:
                for seg_cfg in cfg.segmentations:
                    for i in range(n_eval):
                        x = test.X[i]
                        if progress:
                            progress(spec.name, clf_name, seg_cfg.label, i)
                        try:
                            seg = segment(x, seg_cfg)
                        except Exception as exc:  # noqa: BLE001
                            for bg in cfg.backgrounds:
                                emit_cell_skip((spec.name, clf_name, seg_cfg.label, bg, i),
                                               _skip_reason(exc, "segmentation"))
                            continue
                        for bg in cfg.backgrounds:
                            base = (spec.name, clf_name, seg_cfg.label, bg, i)
                            _run_cell(cfg, model, x, seg, backgrounds[bg], train, stats, reps,
                                      base, emit, emit_cell_skip)
            finally:
                close = getattr(model, "close", None)
                if close is not None:
                    close()
    return sort_records(records, cfg)


def _run_cell(cfg, model, x, seg, background, train, stats, reps, base, emit, emit_cell_skip):
    ds, clf, seg_label, bg, i = base
    try:
        attr = shapley_sampling(model, x, seg, background, m=cfg.shap_permutations,
                                seed=derive_seed(cfg.seed, "shap", ds, clf, seg_label, bg, i))
        cls = attr.explained_class
        if "aucd" in cfg.metrics and cls not in reps:
            reps[cls] = opposite_class_representative(model, train, cls)
    except Exception as exc:  # noqa: BLE001
        emit_cell_skip(base, _skip_reason(exc, "attribution"))
        return
    for norm in cfg.normalization:
        tp = expand(attr, norm)
        for metric in cfg.metrics:
            try:
                values = {}
                if metric == "interprettime":
                    for pert in cfg.active_perturbations:
                        ev = EvalConfig(cfg.evaluation.k_schedule, cfg.evaluation.aucd_step_fraction,
                                        cfg.evaluation.local_mean_radius,
                                        derive_seed(cfg.seed, "eval", ds, clf, seg_label, bg, pert, i))
                        res = interpret_time(model, x, tp, pert, stats, ev)
                        values[(pert, "aucse")] = res.aucse
                        values[(pert, "f_score")] = res.f_score
                else:
                    res = aucd(model, x, tp, train, cfg.evaluation, representative=reps[cls])
                    values[(NO_PERTURBATION, "aucd")] = res.aucd
                if not all(math.isfinite(v) for v in values.values()):
                    raise FloatingPointError("non-finite evaluation value")
            except Exception as exc:  # noqa: BLE001
                emit(base, norm, metric, reason=_skip_reason(exc, "evaluation"))
                continue
            emit(base, norm, metric, values)


def sort_records(records, cfg: ExperimentConfig | None = None) -> list[ResultRecord]:
    """Canonical order: grid key in config order, then instance id."""
    if cfg is None:
        return sorted(records, key=lambda r: (*r.row()[:7], r.instance))
    pos = {
        "dataset": {d.name: k for k, d in enumerate(cfg.datasets)},
        "classifier": {c: k for k, c in enumerate(cfg.classifiers)},
        "segmentation": {s.label: k for k, s in enumerate(cfg.segmentations)},
        "background": {b: k for k, b in enumerate(cfg.backgrounds)},
        "normalization": {n: k for k, n in enumerate(cfg.normalization)},
        "perturbation": {p: k for k, p in enumerate([*cfg.perturbations, NO_PERTURBATION])},
        "metric": {"aucse": 0, "f_score": 1, "aucd": 2},
    }
    return sorted(records, key=lambda r: tuple(
        pos[f][getattr(r, f)] for f in pos
    ) + (r.instance,))


def write_records_csv(records, path_or_file):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.row())

    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(path_or_file)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


def read_records_csv(path_or_file) -> list[ResultRecord]:
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, newline="", encoding="utf-8") as fh:
            return read_records_csv(fh)
    reader = csv.reader(path_or_file)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected records header {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        value = float(row[8]) if row[8] else None
        out.append(ResultRecord(*row[:7], int(row[7]), value, row[9]))
    return out


def run_to_directory(cfg: ExperimentConfig, out_dir: str | None = None, progress=None) -> dict:
    """Run the grid and write ``records.csv`` plus ``metadata.json``."""
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    records = run_experiment(cfg, progress=progress)
    write_records_csv(records, os.path.join(out_dir, "records.csv"))
    skips: dict[str, int] = {}
    for r in records:
        if r.skipped:
            skips[r.skip_reason] = skips.get(r.skip_reason, 0) + 1
    meta = {
        "config": cfg.to_dict(),
        "n_records": len(records),
        "n_valued": sum(not r.skipped for r in records),
        "n_skipped": sum(skips.values()),
        "skip_reasons": dict(sorted(skips.items())),
        "max_instances": cfg.max_instances,
        "seed_scheme": "SeedSequence(seed, spawn_key=crc32 of grid-cell names)",
    }
    with open(os.path.join(out_dir, "metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta


# aggregation ---------------------------------------------------------------


def aggregate(records, group_by=("dataset", "classifier")) -> list[AggregateRecord]:
    """Mean, population std and count per group and metric, skips excluded."""
    group_by = tuple(group_by)
    bad = [g for g in group_by if g not in FACTORS + ("instance",)]
    if bad:
        raise ValueError(f"cannot group by {bad}")
    groups: dict[tuple, list[float]] = {}
    skipped: dict[tuple, int] = {}
    for r in records:
        key = (tuple((g, getattr(r, g)) for g in group_by), r.metric)
        if r.skipped or r.value is None:
            skipped[key] = skipped.get(key, 0) + 1
            continue
        groups.setdefault(key, []).append(float(r.value))
    if not groups:
        raise EmptyAfterFiltering("no valued records to aggregate")
    out = []
    for key in sorted(groups, key=lambda k: (tuple(str(v) for _, v in k[0]), k[1])):
        vals = np.sort(np.asarray(groups[key]))
        out.append(AggregateRecord(key[0], key[1], float(vals.mean()), float(vals.std()),
                                   int(vals.size), skipped.get(key, 0)))
    return out


def normalization_delta_report(records) -> list[AggregateRecord]:
    """Paired ``normalized - replicated`` differences per dataset and segmentation."""
    arms: dict[tuple, dict[str, ResultRecord]] = {}
    for r in records:
        key = (r.dataset, r.classifier, r.segmentation, r.background, r.perturbation,
               r.metric, r.instance)
        arms.setdefault(key, {})[r.normalization] = r
    groups: dict[tuple, list[float]] = {}
    for key, pair in arms.items():
        if set(pair) != {REPLICATED, NORMALIZED}:
            raise UnpairedRecords(f"record {key} lacks a matching normalisation arm")
        rep, norm = pair[REPLICATED], pair[NORMALIZED]
        if rep.skipped or norm.skipped or rep.value is None or norm.value is None:
            continue
        gkey = (key[0], key[2], key[5])
        groups.setdefault(gkey, []).append(norm.value - rep.value)
    if not groups:
        raise EmptyAfterFiltering("no valued record pairs")
    out = []
    for (ds, seg, metric) in sorted(groups):
        vals = np.sort(np.asarray(groups[(ds, seg, metric)]))
        out.append(AggregateRecord((("dataset", ds), ("segmentation", seg)), metric,
                                   float(vals.mean()), float(vals.std()), int(vals.size)))
    return out


def entropy_report(cfg: ExperimentConfig) -> list[AggregateRecord]:
    """Mean and std of the normalised segmentation entropy over test instances."""
    out = []
    for spec in cfg.datasets:
        _, test = load_pair(spec)
        n_eval = min(len(test), cfg.max_instances)
        for seg_cfg in cfg.segmentations:
            vals, failed = [], 0
            for i in range(n_eval):
                try:
                    vals.append(normalized_entropy(segment(test.X[i], seg_cfg)))
                except SegshapError:
                    failed += 1
            if not vals:
                continue
            arr = np.asarray(vals)
            out.append(AggregateRecord((("dataset", spec.name), ("segmentation", seg_cfg.label)),
                                       "normalized_entropy", float(arr.mean()), float(arr.std()),
                                       int(arr.size), failed))
    return out


def write_aggregates_csv(rows, path_or_file):
    rows = [r.as_row() for r in rows]
    fields = list(dict.fromkeys(k for r in rows for k in r))

    def _write(fh):
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})

    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(path_or_file)


__all__ = [
    "CSV_HEADER",
    "METHODS",
    "AggregateRecord",
    "DatasetSpec",
    "ExperimentConfig",
    "ResultRecord",
    "aggregate",
    "config_from_dict",
    "derive_seed",
    "entropy_report",
    "load_config",
    "normalization_delta_report",
    "read_records_csv",
    "run_experiment",
    "run_to_directory",
    "write_aggregates_csv",
    "write_records_csv",
]
