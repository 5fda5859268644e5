"""Nearest-neighbour window segmentation, applied channel by channel."""

from __future__ import annotations

import numpy as np

from ..core import as_series
from ..errors import InvalidCount, SeriesTooShort
from .base import PER_CHANNEL, Segmentation, pad_to_count


def znorm_rows(w: np.ndarray) -> np.ndarray:
    """z-normalise each row; flat rows map to zeros."""
    mu = w.mean(axis=1, keepdims=True)
    sd = w.std(axis=1, keepdims=True)
    return np.divide(w - mu, sd, out=np.zeros_like(w), where=sd > 1e-12)


def window_neighbours(xc: np.ndarray, window: int):
    """Nearest neighbour of every non-overlapping window, excluding itself and
    the two adjacent windows.  Returns ``(indices, distances)``."""
    n_win = len(xc) // window
    w = znorm_rows(xc[: n_win * window].reshape(n_win, window))
    sq = (w**2).sum(axis=1)
    dist = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * w @ w.T, 0.0))
    idx = np.arange(n_win)
    dist[np.abs(idx[:, None] - idx[None, :]) <= 1] = np.inf
    nn = np.argmin(dist, axis=1)
    return nn, dist[idx, nn]


def nn_flags(xc: np.ndarray, window: int):
    """Candidate change points of one channel with their scores.

    A point is flagged at the start of window ``i + 1`` when the nearest
    neighbours of windows ``i`` and ``i + 1`` are not consecutive.  The score
    is the jump in nearest-neighbour distance between the two windows; flags
    with zero jump stem from exactly repeated windows and are dropped.
    """
    nn, nd = window_neighbours(xc, window)
    flags, gaps = [], []
    scale = max(float(np.max(nd)), 1.0)
    for i in range(len(nn) - 1):
        if nn[i + 1] == nn[i] + 1:
            continue
        gap = abs(float(nd[i + 1] - nd[i]))
        if gap > 1e-9 * scale:
            flags.append((i + 1) * window)
            gaps.append(gap)
    return np.array(flags, dtype=np.int64), np.array(gaps)


def segment_nn(x, n: int, window: int | None = None) -> Segmentation:
    """Per-channel NNSegment reduced or padded to exactly ``n`` segments.

    ``window`` defaults to ``max(2, L // 20)``.  Surplus flags are reduced to
    those with the largest distance jump (ties to the earliest point);
    missing ones are filled from the equal split.
    """
    x = as_series(x)
    d, L = x.shape
    if window is None:
        window = max(2, L // 20)
    if n < 1:
        raise InvalidCount(f"segment count must be >= 1, got {n}")
    if window < 2:
        raise InvalidCount("window must be >= 2")
    if L < 3 * window:
        raise SeriesTooShort(f"length {L} is shorter than three windows of {window}")
    if n > L:
        raise SeriesTooShort(f"length {L} cannot hold {n} segments")
    channels = []
    for c in range(d):
        flags, gaps = nn_flags(x[c], window)
        order = np.lexsort((flags, -gaps))[: n - 1]
        channels.append(pad_to_count(flags[order], L, n))
    return Segmentation(tuple(channels), PER_CHANNEL)
