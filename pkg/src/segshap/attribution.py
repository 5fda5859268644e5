"""Segment-level Shapley values and their expansion to timepoints.

Every ``(channel, segment)`` pair of a :class:`Segmentation` is one player.
The value of a coalition ``T`` is the model probability of the explained
class on the instance whose inactive segments are copied from a background
instance, averaged over the background set.

Random permutations are drawn from ``numpy``'s PCG64 generator.  Permutation
``p`` of an explanation seeded with ``seed`` uses the stream
``SeedSequence(seed, spawn_key=(p,))``, so permutations can be evaluated in
any order or in parallel with identical results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, as_series, average_instance
from .errors import (
    InvalidFeature,
    InvalidPermutationCount,
    ShapeMismatch,
    TooManyFeatures,
)
from .segmentation import Segmentation

MAX_EXACT_FEATURES = 12
REPLICATED = "replicated"
NORMALIZED = "normalized"


@dataclass(frozen=True, eq=False)
class BackgroundSet:
    instances: np.ndarray  # (k, d, L)
    kind: str = "custom"

    def __post_init__(self):
        inst = np.asarray(self.instances, dtype=np.float64)
        if inst.ndim == 2:
            inst = inst[None]
        if inst.ndim != 3 or inst.shape[0] < 1:
            raise ShapeMismatch("background set needs at least one (d, L) instance")
        inst.setflags(write=False)
        object.__setattr__(self, "instances", inst)

    def __len__(self):
        return self.instances.shape[0]


def background_zero(d: int, L: int) -> BackgroundSet:
    if d < 1 or L < 1:
        raise ShapeMismatch("background needs d >= 1 and L >= 1")
    return BackgroundSet(np.zeros((1, d, L)), "zero")


def background_average(train: LabeledDataset) -> BackgroundSet:
    return BackgroundSet(average_instance(train)[None], "average")


def make_background(kind: str, train: LabeledDataset) -> BackgroundSet:
    if kind == "zero":
        return background_zero(train.n_channels, train.length)
    if kind == "average":
        return background_average(train)
    raise ValueError(f"unknown background {kind!r}")


@dataclass(frozen=True, eq=False)
class SegmentAttribution:
    """Shapley value of every ``(channel, segment)`` feature.

    ``values`` is flat, in the channel-major order of
    :meth:`Segmentation.features`.
    """

    values: np.ndarray
    explained_class: int
    base_value: float
    segmentation: Segmentation
    n_permutations: int = 0
    seed: int | None = None
    full_value: float = float("nan")

    def per_channel(self) -> list[np.ndarray]:
        out, offset = [], 0
        for c in range(self.segmentation.n_channels):
            k = self.segmentation.n_segments(c)
            out.append(self.values[offset : offset + k])
            offset += k
        return out

    def scaled(self, factor: float) -> "SegmentAttribution":
        return SegmentAttribution(
            self.values * factor, self.explained_class, self.base_value,
            self.segmentation, self.n_permutations, self.seed, self.full_value,
        )


@dataclass(frozen=True, eq=False)
class TimepointAttribution:
    values: np.ndarray  # (d, L)
    mode: str
    source: SegmentAttribution | None = None

    def to_dict(self) -> dict:
        src = self.source
        return {
            "explained_class": None if src is None else int(src.explained_class),
            "base_value": None if src is None else float(src.base_value),
            "segment_values": None if src is None else [v.tolist() for v in src.per_channel()],
            "timepoint_values": self.values.tolist(),
            "mode": self.mode,
            "seed": None if src is None else src.seed,
            "n_permutations": None if src is None else int(src.n_permutations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def mask_replace(x, background, active, seg: Segmentation) -> np.ndarray:
    """Keep ``x`` on active features and take ``background`` elsewhere.

    ``active`` is an iterable of ``(channel, segment)`` pairs or a boolean
    vector over features.
    """
    x = as_series(x)
    background = as_series(background)
    if x.shape != background.shape or x.shape != (seg.n_channels, seg.length):
        raise ShapeMismatch(
            f"instance {x.shape}, background {background.shape} and segmentation "
            f"({seg.n_channels}, {seg.length}) disagree"
        )
    keep = _active_vector(active, seg)
    return np.where(keep[seg.feature_map()], x, background)


def _active_vector(active, seg: Segmentation) -> np.ndarray:
    arr = np.asarray(active) if not isinstance(active, (set, frozenset)) else None
    if arr is not None and arr.dtype == bool and arr.ndim == 1:
        if arr.size != seg.n_features:
            raise InvalidFeature("boolean feature mask has the wrong length")
        return arr
    index = {f: i for i, f in enumerate(seg.features())}
    keep = np.zeros(seg.n_features, dtype=bool)
    for feat in active:
        try:
            keep[index[tuple(int(v) for v in feat)]] = True
        except KeyError:
            raise InvalidFeature(f"{feat!r} is not a feature of the segmentation") from None
    return keep


def _check_inputs(model, x, seg, background):
    x = as_series(x)
    if x.shape != (seg.n_channels, seg.length):
        raise ShapeMismatch(f"instance {x.shape} does not match the segmentation")
    if background.instances.shape[1:] != x.shape:
        raise ShapeMismatch(f"background {background.instances.shape[1:]} != instance {x.shape}")
    return x


def _coalition_values(model, x, seg, background, cls, masks: np.ndarray) -> np.ndarray:
    """Value of every coalition in ``masks`` (rows of a boolean feature matrix)."""
    fmap = seg.feature_map()
    cell_masks = masks[:, fmap]  # (m, d, L)
    bgs = background.instances
    batch = np.where(cell_masks[:, None], x[None, None], bgs[None])  # (m, k, d, L)
    proba = np.asarray(model.predict_proba(batch.reshape(-1, *x.shape)))
    return proba[:, cls].reshape(masks.shape[0], len(bgs)).mean(axis=1)


def _explained_class(model, x, cls):
    if cls is not None:
        return int(cls)
    return int(np.argmax(np.asarray(model.predict_proba(x[None]))[0]))


def shapley_exact(model, x, seg: Segmentation, background: BackgroundSet, cls: int | None = None):
    """Brute-force Shapley values over all ``2^F`` coalitions (``F <= 12``)."""
    x = _check_inputs(model, x, seg, background)
    F = seg.n_features
    if F > MAX_EXACT_FEATURES:
        raise TooManyFeatures(f"{F} features exceed the exact limit of {MAX_EXACT_FEATURES}")
    cls = _explained_class(model, x, cls)
    codes = np.arange(2**F)
    masks = ((codes[:, None] >> np.arange(F)) & 1).astype(bool)
    v = _coalition_values(model, x, seg, background, cls, masks)
    sizes = masks.sum(axis=1)
    weight = np.array([math.factorial(s) * math.factorial(F - s - 1) / math.factorial(F)
                       for s in range(F)])
    phi = np.zeros(F)
    for j in range(F):
        without = codes[~masks[:, j]]
        phi[j] = np.sum(weight[sizes[without]] * (v[without | (1 << j)] - v[without]))
    return SegmentAttribution(phi, cls, float(v[0]), seg, 0, None, float(v[-1]))


def permutation_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def shapley_sampling(
    model,
    x,
    seg: Segmentation,
    background: BackgroundSet,
    cls: int | None = None,
    m: int = 25,
    seed: int = 0,
) -> SegmentAttribution:
    """Shapley Value Sampling over ``m`` random feature permutations.

    Each permutation walks from the all-background instance to ``x``,
    switching one feature on at a time; the ``F + 1`` states are scored in a
    single batched model call.  Marginals along a walk telescope, so the
    estimate is exactly efficient for any ``m``.
    """
    if m < 1:
        raise InvalidPermutationCount(f"need at least one permutation, got {m}")
    x = _check_inputs(model, x, seg, background)
    F = seg.n_features
    cls = _explained_class(model, x, cls)
    total = np.zeros(F)
    base = full = 0.0
    steps = np.tri(F + 1, F, -1, dtype=bool)  # row i: first i features of the order active
    for p in range(m):
        order = permutation_rng(seed, p).permutation(F)
        masks = np.zeros((F + 1, F), dtype=bool)
        masks[:, order] = steps
        v = _coalition_values(model, x, seg, background, cls, masks)
        total[order] += np.diff(v)
        base, full = v[0], v[-1]
    return SegmentAttribution(total / m, cls, float(base), seg, m, seed, float(full))


def replicate_to_timepoints(attr: SegmentAttribution) -> TimepointAttribution:
    """Every timepoint of a segment carries the full segment value."""
    values = attr.values[attr.segmentation.feature_map()]
    return TimepointAttribution(values, REPLICATED, attr)


def normalize_to_timepoints(attr: SegmentAttribution) -> TimepointAttribution:
    """Spread each segment value uniformly over the segment's timepoints."""
    seg = attr.segmentation
    lengths = np.concatenate([seg.segment_lengths(c) for c in range(seg.n_channels)])
    values = (attr.values / lengths)[seg.feature_map()]
    return TimepointAttribution(values, NORMALIZED, attr)


def expand(attr: SegmentAttribution, mode: str) -> TimepointAttribution:
    if mode == REPLICATED:
        return replicate_to_timepoints(attr)
    if mode == NORMALIZED:
        return normalize_to_timepoints(attr)
    raise ValueError(f"unknown expansion mode {mode!r}")
