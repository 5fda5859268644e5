from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidCount, SeriesTooShort

SHARED = "shared"
PER_CHANNEL = "per_channel"


@dataclass(frozen=True)
class Segmentation:
    """Per-channel ordered segment boundaries ``0 = b_0 < ... < b_m = L``.

    Segment ``i`` of channel ``c`` is the half-open interval
    ``[boundaries[c][i], boundaries[c][i + 1])``.  ``fallback`` marks
    segmentations that degraded to an equal split.
    """

    boundaries: tuple
    mode: str = SHARED
    fallback: bool = field(default=False, compare=False)

    def __post_init__(self):
        bounds = tuple(tuple(int(b) for b in ch) for ch in self.boundaries)
        if not bounds:
            raise ValueError("segmentation needs at least one channel")
        if self.mode not in (SHARED, PER_CHANNEL):
            raise ValueError(f"unknown segmentation mode {self.mode!r}")
        L = bounds[0][-1] if bounds[0] else 0
        for ch in bounds:
            if len(ch) < 2 or ch[0] != 0 or ch[-1] != L:
                raise ValueError("boundaries must start at 0 and end at L")
            if any(a >= b for a, b in zip(ch[:-1], ch[1:])):
                raise ValueError("boundaries must be strictly increasing")
        if self.mode == SHARED and any(ch != bounds[0] for ch in bounds):
            raise ValueError("shared segmentation needs identical channel boundaries")
        object.__setattr__(self, "boundaries", bounds)

    @classmethod
    def shared(cls, boundaries, n_channels: int = 1, fallback: bool = False):
        b = tuple(int(v) for v in boundaries)
        return cls((b,) * n_channels, SHARED, fallback)

    @property
    def n_channels(self) -> int:
        return len(self.boundaries)

    @property
    def length(self) -> int:
        return self.boundaries[0][-1]

    @property
    def n_features(self) -> int:
        return sum(len(ch) - 1 for ch in self.boundaries)

    def n_segments(self, channel: int = 0) -> int:
        return len(self.boundaries[channel]) - 1

    def segment_lengths(self, channel: int = 0) -> np.ndarray:
        return np.diff(self.boundaries[channel])

    def features(self) -> list[tuple[int, int]]:
        """All ``(channel, segment)`` features in channel-major order."""
        return [(c, s) for c, ch in enumerate(self.boundaries) for s in range(len(ch) - 1)]

    def feature_map(self) -> np.ndarray:
        """``(d, L)`` integer array holding the feature index of every cell."""
        out = np.empty((self.n_channels, self.length), dtype=np.int64)
        offset = 0
        for c, ch in enumerate(self.boundaries):
            out[c] = offset + np.repeat(np.arange(len(ch) - 1), np.diff(ch))
            offset += len(ch) - 1
        return out

    def to_dict(self) -> dict:
        return {"mode": self.mode, "boundaries": [list(ch) for ch in self.boundaries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Segmentation":
        return cls(tuple(tuple(ch) for ch in obj["boundaries"]), obj.get("mode", SHARED))

    @classmethod
    def from_json(cls, text: str) -> "Segmentation":
        return cls.from_dict(json.loads(text))


def equal_boundaries(L: int, n: int, start: int = 0) -> list[int]:
    """Boundaries of ``n`` near-equal segments of ``[start, start + L)``.

    The first ``L mod n`` segments are one timepoint longer.
    """
    if n < 1 or n > L:
        raise InvalidCount(f"cannot split length {L} into {n} segments")
    q, r = divmod(L, n)
    lengths = [q + 1] * r + [q] * (n - r)
    return [start] + list(start + np.cumsum(lengths))


def segment_equal(L: int, n: int, d: int = 1) -> Segmentation:
    return Segmentation.shared(equal_boundaries(L, n), d)


def pad_to_count(points, L: int, n: int) -> list[int]:
    """Return exactly ``n - 1`` interior change points.

    ``points`` must already hold at most ``n - 1`` distinct interior points;
    missing ones are filled from the equal split, left to right.
    """
    chosen = sorted(set(int(p) for p in points))
    if len(chosen) > n - 1:
        raise ValueError("too many change points to pad")
    for p in equal_boundaries(L, n)[1:-1]:
        if len(chosen) == n - 1:
            break
        if p not in chosen:
            chosen.append(p)
    return [0] + sorted(chosen) + [L]


def normalized_entropy(seg: Segmentation) -> float:
    """Mean over channels of the segment-length entropy divided by ``ln n``.

    Channels with a single segment count as 1.0.
    """
    L = seg.length
    values = []
    for c in range(seg.n_channels):
        lengths = seg.segment_lengths(c)
        n = len(lengths)
        if n == 1 or np.all(lengths == lengths[0]):
            values.append(1.0)
            continue
        p = lengths / L
        h = -float(np.sum(p * np.log(p)))
        values.append(min(h / np.log(n), 1.0))
    return float(np.mean(values))


def check_count(n: int, L: int, min_size: int = 1):
    if n < 1:
        raise InvalidCount(f"segment count must be >= 1, got {n}")
    if min_size < 1:
        raise InvalidCount(f"min_size must be >= 1, got {min_size}")
    if L < n * min_size:
        raise SeriesTooShort(f"length {L} cannot hold {n} segments of size >= {min_size}")
