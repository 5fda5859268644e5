"""Time series data model, dataset ingestion and synthetic fixtures.

A time series is a plain ``float64`` array of shape ``(d, L)``; a dataset
stacks ``n`` of them into an ``(n, d, L)`` array.  Only equal-length, fully
observed data is supported.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataRowMismatch,
    EmptyData,
    InvalidGeometry,
    MalformedHeader,
    NonDivisibleColumns,
    NonNumericValue,
    ShapeMismatch,
    UnsupportedFeature,
)

__all__ = [
    "ChannelStats",
    "LabeledDataset",
    "as_series",
    "average_instance",
    "compute_channel_stats",
    "concat_channels",
    "load_dataset",
    "parse_csv",
    "parse_ts_file",
    "serialize_ts",
    "synth_bump_dataset",
]


def as_series(x) -> np.ndarray:
    """Validate ``x`` as a time series and return it as a ``(d, L)`` array.

    One-dimensional input is treated as a univariate series.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"expected a (d, L) series, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("time series contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Equal-length labelled collection of time series.

    Attributes
    ----------
    X : ndarray of shape (n, d, L)
    y : ndarray of shape (n,)
        Integer indices into ``class_names``.
    class_names : tuple of str
    role : str
        ``"train"``, ``"test"`` or any other tag.
    """

    X: np.ndarray
    y: np.ndarray
    class_names: tuple
    role: str = "train"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if X.ndim != 3:
            raise ShapeMismatch(f"dataset array must be (n, d, L), got {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ShapeMismatch("instances and labels differ in count")
        if X.shape[0] and (X.shape[1] < 1 or X.shape[2] < 1):
            raise ShapeMismatch("instances must have d >= 1 and L >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite values")
        names = tuple(str(c) for c in self.class_names)
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise ValueError("label index out of range of class_names")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", names)

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_channels(self) -> int:
        return self.X.shape[1]

    @property
    def length(self) -> int:
        return self.X.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], self.class_names, self.role)

    def with_classes(self, class_names) -> "LabeledDataset":
        """Re-index labels against another ordered list of class names."""
        class_names = tuple(str(c) for c in class_names)
        lookup = {name: i for i, name in enumerate(class_names)}
        try:
            y = [lookup[self.class_names[k]] for k in self.y]
        except KeyError as exc:
            raise DataRowMismatch(f"unknown class label {exc.args[0]!r}") from None
        return LabeledDataset(self.X, np.asarray(y, dtype=np.int64), class_names, self.role)


@dataclass(frozen=True)
class ChannelStats:
    mean: np.ndarray
    std: np.ndarray = field(repr=False)


def compute_channel_stats(dataset: LabeledDataset) -> ChannelStats:
    """Per-channel mean and population std over all instances and timepoints."""
    if len(dataset) == 0:
        raise EmptyData("cannot compute statistics of an empty dataset")
    X = dataset.X
    return ChannelStats(mean=X.mean(axis=(0, 2)), std=X.std(axis=(0, 2)))


def average_instance(dataset: LabeledDataset) -> np.ndarray:
    if len(dataset) == 0:
        raise EmptyData("cannot average an empty dataset")
    return dataset.X.mean(axis=0)


def concat_channels(x) -> np.ndarray:
    """Flatten a ``(d, L)`` series into ``(1, d*L)``, channel after channel."""
    x = as_series(x)
    return x.reshape(1, -1)


# .ts subset ----------------------------------------------------------------

_TS_DIRECTIVES = {
    "problemname",
    "timestamps",
    "univariate",
    "dimensions",
    "equallength",
    "serieslength",
    "classlabel",
    "data",
}


def _parse_bool(token: str, directive: str) -> bool:
    low = token.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    raise MalformedHeader(f"@{directive} expects true or false, got {token!r}")


def _parse_int(token: str, directive: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise MalformedHeader(f"@{directive} expects an integer, got {token!r}") from None
    if value < 1:
        raise MalformedHeader(f"@{directive} must be positive")
    return value


def parse_ts_file(text, role: str = "train") -> LabeledDataset:
    """Parse the supported subset of the sktime/UEA ``.ts`` format.

    ``text`` may be a string or a text stream.  Timestamps, unequal lengths
    and missing values raise :class:`UnsupportedFeature`.
    """
    if not isinstance(text, str):
        text = text.read()
    header: dict[str, object] = {}
    rows: list[tuple[int, str]] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_data:
            rows.append((lineno, line))
            continue
        if not line.startswith("@"):
            raise MalformedHeader(f"line {lineno}: expected a directive, got {line[:30]!r}")
        parts = line[1:].split()
        name = parts[0].lower()
        args = parts[1:]
        if name not in _TS_DIRECTIVES:
            raise MalformedHeader(f"line {lineno}: unknown directive @{parts[0]}")
        if name in header:
            raise MalformedHeader(f"line {lineno}: duplicate directive @{parts[0]}")
        if name == "data":
            if args:
                raise MalformedHeader("@data takes no arguments")
            header[name] = True
            in_data = True
            continue
        if not args:
            raise MalformedHeader(f"line {lineno}: @{parts[0]} needs a value")
        if name == "problemname":
            header[name] = " ".join(args)
        elif name == "classlabel":
            has_labels = _parse_bool(args[0], name)
            if not has_labels:
                raise UnsupportedFeature("unlabelled .ts files are not supported")
            labels = args[1:]
            if not labels:
                raise MalformedHeader("@classLabel true must list the class labels")
            if len(set(labels)) != len(labels):
                raise MalformedHeader("@classLabel lists a label twice")
            header[name] = tuple(labels)
        elif name in ("timestamps", "univariate", "equallength"):
            if len(args) != 1:
                raise MalformedHeader(f"@{parts[0]} takes exactly one value")
            header[name] = _parse_bool(args[0], name)
        else:
            if len(args) != 1:
                raise MalformedHeader(f"@{parts[0]} takes exactly one value")
            header[name] = _parse_int(args[0], name)

    if header.get("timestamps"):
        raise UnsupportedFeature("timestamped series are not supported")
    if header.get("equallength") is False:
        raise UnsupportedFeature("unequal-length series are not supported")
    if "data" not in header:
        raise MalformedHeader("missing @data section")
    if "serieslength" not in header:
        raise MalformedHeader("missing @seriesLength")
    if "classlabel" not in header:
        raise MalformedHeader("missing @classLabel")
    univariate = header.get("univariate", "dimensions" not in header)
    if univariate:
        d = header.get("dimensions", 1)
        if d != 1:
            raise MalformedHeader("@univariate true conflicts with @dimensions > 1")
    else:
        if "dimensions" not in header:
            raise MalformedHeader("@dimensions is required for multivariate data")
        d = header["dimensions"]
    L = header["serieslength"]
    labels = header["classlabel"]
    lookup = {lab: i for i, lab in enumerate(labels)}

    if not rows:
        raise EmptyData("the @data section has no rows")
    X = np.empty((len(rows), d, L))
    y = np.empty(len(rows), dtype=np.int64)
    for i, (lineno, line) in enumerate(rows):
        if "?" in line:
            raise UnsupportedFeature(f"line {lineno}: missing values are not supported")
        fields = line.split(":")
        if len(fields) != d + 1:
            raise DataRowMismatch(
                f"line {lineno}: expected {d} channels plus label, got {len(fields)} fields"
            )
        for c in range(d):
            values = fields[c].split(",")
            if len(values) != L:
                raise DataRowMismatch(
                    f"line {lineno}: channel {c} has {len(values)} values, expected {L}"
                )
            try:
                X[i, c] = [float(v) for v in values]
            except ValueError:
                raise DataRowMismatch(f"line {lineno}: non-numeric value") from None
        label = fields[-1].strip()
        if label not in lookup:
            raise DataRowMismatch(f"line {lineno}: undeclared class label {label!r}")
        y[i] = lookup[label]
    if not np.all(np.isfinite(X)):
        raise UnsupportedFeature("non-finite values are not supported")
    return LabeledDataset(X, y, labels, role)


def serialize_ts(dataset: LabeledDataset, problem_name: str = "segshap") -> str:
    """Write ``dataset`` in the supported ``.ts`` subset (lossless floats)."""
    d, L = dataset.n_channels, dataset.length
    lines = [
        f"@problemName {problem_name}",
        "@timeStamps false",
        f"@univariate {'true' if d == 1 else 'false'}",
    ]
    if d > 1:
        lines.append(f"@dimensions {d}")
    lines += [
        "@equalLength true",
        f"@seriesLength {L}",
        "@classLabel true " + " ".join(dataset.class_names),
        "@data",
    ]
    for x, label in zip(dataset.X, dataset.y):
        channels = [",".join(repr(float(v)) for v in row) for row in x]
        lines.append(":".join(channels) + ":" + dataset.class_names[label])
    return "\n".join(lines) + "\n"


def parse_csv(text, d: int = 1, role: str = "train") -> LabeledDataset:
    """Parse a header-less CSV whose last column is the label.

    Channels are stored channel-major: all timepoints of channel 0, then
    channel 1, and so on.
    """
    if d < 1:
        raise ValueError("channel count must be >= 1")
    if isinstance(text, str):
        text = io.StringIO(text)
    rows = [row for row in csv.reader(text) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise EmptyData("CSV has no rows")
    n_cols = len(rows[0])
    if n_cols < 2:
        raise NonDivisibleColumns("CSV rows need at least one value and a label")
    if (n_cols - 1) % d:
        raise NonDivisibleColumns(f"{n_cols - 1} value columns are not divisible by d={d}")
    L = (n_cols - 1) // d
    X = np.empty((len(rows), d * L))
    labels: list[str] = []
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataRowMismatch(f"row {i}: expected {n_cols} columns, got {len(row)}")
        for j, cell in enumerate(row[:-1]):
            try:
                X[i, j] = float(cell)
            except ValueError:
                raise NonNumericValue(f"row {i}, column {j}: {cell!r}") from None
        labels.append(row[-1].strip())
    if not np.all(np.isfinite(X)):
        raise NonNumericValue("CSV contains non-finite values")
    class_names = tuple(dict.fromkeys(labels))
    lookup = {name: k for k, name in enumerate(class_names)}
    y = np.array([lookup[lab] for lab in labels], dtype=np.int64)
    return LabeledDataset(X.reshape(len(rows), d, L), y, class_names, role)


def load_dataset(path, channels: int = 1, role: str = "train") -> LabeledDataset:
    """Load a ``.ts`` or ``.csv`` file chosen by extension."""
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        if path.lower().endswith(".csv"):
            return parse_csv(fh, d=channels, role=role)
        return parse_ts_file(fh, role=role)


# synthetic fixture ---------------------------------------------------------


def bump_templates(d: int, L: int, n_classes: int, bump_width: int) -> np.ndarray:
    """Noise-free class templates of :func:`synth_bump_dataset`."""
    spacing = L // n_classes
    templates = np.zeros((n_classes, d, L))
    for c in range(n_classes):
        templates[c, 0, c * spacing : c * spacing + bump_width] = 1.0
    return templates


def synth_bump_dataset(
    n_instances: int,
    d: int,
    L: int,
    n_classes: int,
    bump_width: int,
    noise_std: float,
    seed: int,
    role: str = "train",
) -> LabeledDataset:
    """Classes differ by the position of a unit rectangular bump on channel 0.

    Labels are assigned round-robin so every class is populated once
    ``n_instances >= n_classes``.
    """
    if n_classes < 2 or bump_width < 1 or d < 1 or L < 1 or n_instances < 1:
        raise InvalidGeometry("need n_classes >= 2 and positive sizes")
    if n_classes * bump_width > L:
        raise InvalidGeometry(
            f"{n_classes} bumps of width {bump_width} do not fit in length {L}"
        )
    if noise_std < 0 or not math.isfinite(noise_std):
        raise InvalidGeometry("noise_std must be a finite non-negative number")
    rng = np.random.default_rng(seed)
    templates = bump_templates(d, L, n_classes, bump_width)
    y = np.arange(n_instances) % n_classes
    X = templates[y] + rng.normal(0.0, noise_std, size=(n_instances, d, L))
    names = tuple(f"c{c}" for c in range(n_classes))
    return LabeledDataset(X, y, names, role)
