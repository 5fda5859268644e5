"""Greedy Gaussian segmentation: boundaries inserted one at a time to maximise
the log-likelihood of an independent-channel Gaussian per segment."""

from __future__ import annotations

import numpy as np

from ..core import as_series
from ..errors import SeriesTooShort
from .base import Segmentation, check_count


def _loglik(n, s1, s2, reg):
    # per-channel Gaussian with ML mean and variance sigma^2 + reg
    var = np.maximum(s2 / n - (s1 / n) ** 2, 0.0)
    v = var + reg
    return -0.5 * n * (np.log(2 * np.pi * v) + var / v)


def gaussian_loglik(x, bounds, reg: float = 1e-4) -> float:
    x = as_series(x)
    total = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = x[:, a:b]
        total += float(_loglik(b - a, seg.sum(axis=1), (seg**2).sum(axis=1), reg).sum())
    return total


def segment_greedy_gaussian(x, n: int, reg: float = 1e-4, min_size: int = 2) -> Segmentation:
    x = as_series(x)
    d, L = x.shape
    check_count(n, L, min_size)
    if not reg > 0:
        raise ValueError("reg must be positive")
    c1 = np.concatenate([np.zeros((d, 1)), np.cumsum(x, axis=1)], axis=1)
    c2 = np.concatenate([np.zeros((d, 1)), np.cumsum(x**2, axis=1)], axis=1)

    def ll(a, b):
        # a, b broadcastable index arrays; sums over channels
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        return _loglik(b - a, c1[:, b] - c1[:, a], c2[:, b] - c2[:, a], reg).sum(axis=0)

    bounds = [0, L]
    while len(bounds) - 1 < n:
        best_gain, best_pos = -np.inf, None
        for a, b in zip(bounds[:-1], bounds[1:]):
            ts = np.arange(a + min_size, b - min_size + 1)
            if ts.size == 0:
                continue
            gain = ll(a, ts) + ll(ts, b) - ll(a, b)
            j = int(np.argmax(gain))
            if best_pos is None or gain[j] > best_gain + 1e-12 * max(1.0, abs(best_gain)):
                best_gain, best_pos = gain[j], int(ts[j])
        if best_pos is None:
            raise SeriesTooShort("no admissible split left")
        bounds = sorted(bounds + [best_pos])
    return Segmentation.shared(bounds, d)
