"""Information-gain segmentation (top-down greedy, IGTS style)."""

from __future__ import annotations

import warnings

import numpy as np

from ..core import as_series
from ..errors import DegenerateSignal, SeriesTooShort
from .base import Segmentation, check_count, equal_boundaries


def _mass_channels(x: np.ndarray) -> np.ndarray | None:
    """Min-max scale each channel and append its complement ``1 - x``.

    The complement makes the per-segment channel mass a proper distribution
    even for univariate input.  Returns ``None`` when every channel is flat.
    """
    lo = x.min(axis=1, keepdims=True)
    span = x.max(axis=1, keepdims=True) - lo
    if np.all(span == 0):
        return None
    scaled = np.divide(x - lo, span, out=np.zeros_like(x), where=span > 0)
    return np.vstack([scaled, 1.0 - scaled])


def _entropy_rows(mass: np.ndarray) -> np.ndarray:
    """Shannon entropy (nats) of every column of a non-negative mass matrix."""
    total = mass.sum(axis=0)
    p = np.divide(mass, total, out=np.zeros_like(mass), where=total > 0)
    logs = np.log(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=0)


def information_gain(x, bounds) -> float:
    """Entropy of the whole series minus the length-weighted segment entropies."""
    x = as_series(x)
    mass = _mass_channels(x)
    if mass is None:
        return 0.0
    L = x.shape[1]
    seg_mass = np.stack([mass[:, a:b].sum(axis=1) for a, b in zip(bounds[:-1], bounds[1:])], axis=1)
    weights = np.diff(bounds) / L
    whole = _entropy_rows(mass.sum(axis=1, keepdims=True))[0]
    return float(whole - (weights * _entropy_rows(seg_mass)).sum())


def segment_infogain(x, n: int, min_size: int = 2) -> Segmentation:
    """Insert change points one at a time, each maximising information gain.

    A flat signal carries no information; the result then falls back to an
    equal split, flagged via ``Segmentation.fallback`` and a
    :class:`DegenerateSignal` warning.
    """
    x = as_series(x)
    d, L = x.shape
    check_count(n, L, min_size)
    mass = _mass_channels(x)
    if mass is None:
        warnings.warn("flat signal: falling back to equal segmentation", DegenerateSignal, stacklevel=2)
        return Segmentation.shared(equal_boundaries(L, n), d, fallback=True)
    cum = np.concatenate([np.zeros((mass.shape[0], 1)), np.cumsum(mass, axis=1)], axis=1)

    def weighted_entropy(a, b):
        return (b - a) / L * _entropy_rows((cum[:, b] - cum[:, a])[:, None])[0]

    bounds = [0, L]
    while len(bounds) - 1 < n:
        best_gain, best_pos = -np.inf, None
        for a, b in zip(bounds[:-1], bounds[1:]):
            ts = np.arange(a + min_size, b - min_size + 1)
            if ts.size == 0:
                continue
            left = cum[:, ts] - cum[:, [a]]
            right = cum[:, [b]] - cum[:, ts]
            after = (ts - a) / L * _entropy_rows(left) + (b - ts) / L * _entropy_rows(right)
            gain = weighted_entropy(a, b) - after
            j = int(np.argmax(gain))
            if gain[j] > best_gain + 1e-12:
                best_gain, best_pos = gain[j], int(ts[j])
        if best_pos is None:
            raise SeriesTooShort("no admissible split left")
        bounds = sorted(bounds + [best_pos])
    return Segmentation.shared(bounds, d)
