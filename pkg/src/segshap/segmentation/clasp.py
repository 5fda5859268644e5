"""Classification score profile segmentation, applied channel by channel.

For a candidate split ``s`` of a segment, every sliding window of length
``period`` is labelled left (starts before ``s``) or right.  The score of
``s`` is the leave-one-out accuracy of a 1-NN classifier predicting those
labels, with z-normalised Euclidean distance and trivial matches (windows
overlapping the query) excluded.  Segments are split recursively at the
highest profile peak.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core import as_series
from ..errors import InvalidCount, SeriesTooShort
from .base import PER_CHANNEL, Segmentation, pad_to_count
from .nnsegment import znorm_rows

_CHUNK = 512


def window_nn(xc: np.ndarray, period: int) -> np.ndarray:
    """Index of the nearest non-overlapping sliding window for each window."""
    w = znorm_rows(sliding_window_view(np.asarray(xc, dtype=np.float64), period))
    n = w.shape[0]
    sq = (w**2).sum(axis=1)
    nn = np.empty(n, dtype=np.int64)
    idx = np.arange(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        dist = sq[lo:hi, None] + sq[None, :] - 2 * w[lo:hi] @ w.T
        dist[np.abs(idx[lo:hi, None] - idx[None, :]) < period] = np.inf
        nn[lo:hi] = np.argmin(dist, axis=1)
    return nn


def score_profile(xc, period: int = 4):
    """Score profile of one channel segment.

    Returns ``(splits, scores)``: admissible split positions (at least
    ``period`` from either end) and the 1-NN accuracy at each, in ``[0, 1]``.
    """
    xc = np.asarray(xc, dtype=np.float64)
    m = len(xc)
    if m < 4 * period:
        return np.empty(0, dtype=np.int64), np.empty(0)
    nn = window_nn(xc, period)
    n_win = len(nn)
    idx = np.arange(n_win)
    # window j is misclassified at split s iff s in (min(j, nn_j), max(j, nn_j)]
    lo = np.minimum(idx, nn) + 1
    hi = np.maximum(idx, nn) + 1
    diff = np.zeros(m + 2)
    np.add.at(diff, lo, 1.0)
    np.add.at(diff, hi, -1.0)
    errors = np.cumsum(diff)[: m + 1]
    splits = np.arange(period, m - period + 1)
    return splits, 1.0 - errors[splits] / n_win


def _best_split(xc, a, b, period):
    splits, scores = score_profile(xc[a:b], period)
    if splits.size == 0:
        return None
    j = int(np.argmax(scores))
    return float(scores[j]), a + int(splits[j])


def segment_clasp(x, n: int, period: int = 4) -> Segmentation:
    """Recursive ClaSP segmentation, one boundary list per channel.

    When no segment is long enough for another split, the remaining change
    points are filled from the equal split.
    """
    x = as_series(x)
    d, L = x.shape
    if n < 1:
        raise InvalidCount(f"segment count must be >= 1, got {n}")
    if period < 2:
        raise InvalidCount("period must be >= 2")
    if L < 4 * period:
        raise SeriesTooShort(f"length {L} is shorter than 4 * period = {4 * period}")
    if n > L:
        raise SeriesTooShort(f"length {L} cannot hold {n} segments")
    channels = []
    for c in range(d):
        xc = x[c]
        bounds = [0, L]
        cache = {}
        while len(bounds) - 1 < n:
            best = None
            for a, b in zip(bounds[:-1], bounds[1:]):
                if (a, b) not in cache:
                    cache[(a, b)] = _best_split(xc, a, b, period)
                cand = cache[(a, b)]
                if cand is not None and (best is None or cand[0] > best[0]):
                    best = cand
            if best is None:
                break
            bounds = sorted(bounds + [best[1]])
        channels.append(pad_to_count(bounds[1:-1], L, n))
    return Segmentation(tuple(channels), PER_CHANNEL)
