"""Cost-based change point search: binary segmentation, bottom-up merging and
an exact dynamic program for the linear-kernel (within-segment scatter) cost.

All three return boundaries shared by every channel; multichannel costs are
summed over channels.  Ties go to the lowest index.
"""

from __future__ import annotations

import numpy as np

from ..core import as_series
from ..errors import InvalidCount, SeriesTooShort
from .base import Segmentation, check_count


def l1_cost(x: np.ndarray, start: int, end: int) -> float:
    """Sum over channels of absolute deviations from the segment median."""
    seg = x[:, start:end]
    med = np.median(seg, axis=1, keepdims=True)
    return float(np.abs(seg - med).sum())


def scatter_cost(x: np.ndarray, start: int, end: int) -> float:
    """Within-segment scatter ``sum_t ||x_t - mean||^2``."""
    seg = x[:, start:end]
    return float(((seg - seg.mean(axis=1, keepdims=True)) ** 2).sum())


def total_cost(x, seg: Segmentation, cost=scatter_cost) -> float:
    """Cost of a segmentation; per-channel boundaries are costed per channel."""
    x = as_series(x)
    total = 0.0
    for c, bounds in enumerate(seg.boundaries):
        xc = x[c : c + 1]
        total += sum(cost(xc, a, b) for a, b in zip(bounds[:-1], bounds[1:]))
    return total


def _best_l1_split(x, start, end, min_size):
    """Best single split of ``[start, end)``: ``(gain, position)`` or ``None``."""
    candidates = range(start + min_size, end - min_size + 1)
    if not candidates:
        return None
    whole = l1_cost(x, start, end)
    best_gain, best_pos = 0.0, None
    for t in candidates:
        gain = whole - l1_cost(x, start, t) - l1_cost(x, t, end)
        # strict comparison keeps the lowest index on ties
        if best_pos is None or gain > best_gain + 1e-12 * max(1.0, abs(best_gain)):
            best_gain, best_pos = gain, t
    return best_gain, best_pos


def segment_binseg(x, n: int, min_size: int = 2) -> Segmentation:
    """Greedy top-down binary segmentation under the L1 cost.

    At every step the segment whose best split removes the most cost is
    split, until ``n`` segments exist.
    """
    x = as_series(x)
    d, L = x.shape
    check_count(n, L, min_size)
    bounds = [0, L]
    cache: dict[tuple[int, int], tuple | None] = {}
    while len(bounds) - 1 < n:
        best = None
        for a, b in zip(bounds[:-1], bounds[1:]):
            if (a, b) not in cache:
                cache[(a, b)] = _best_l1_split(x, a, b, min_size)
            cand = cache[(a, b)]
            if cand is None:
                continue
            gain, pos = cand
            if best is None or gain > best[0] + 1e-12 * max(1.0, abs(best[0])):
                best = (gain, pos)
        if best is None:
            raise SeriesTooShort("no admissible split left")
        bounds = sorted(bounds + [best[1]])
    return Segmentation.shared(bounds, d)


def segment_bottomup(x, n: int, initial_width: int = 2) -> Segmentation:
    """Merge an over-split of width ``initial_width`` until ``n`` segments remain.

    Each merge joins the adjacent pair whose union increases the total L1
    cost the least.
    """
    x = as_series(x)
    d, L = x.shape
    if n < 1:
        raise InvalidCount(f"segment count must be >= 1, got {n}")
    if initial_width < 1:
        raise InvalidCount("initial_width must be >= 1")
    bounds = list(range(0, L, initial_width)) + [L]
    if n > len(bounds) - 1:
        raise SeriesTooShort(
            f"length {L} over-split at width {initial_width} has fewer than {n} segments"
        )
    seg_cost = [l1_cost(x, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    merge_inc = [
        l1_cost(x, bounds[i], bounds[i + 2]) - seg_cost[i] - seg_cost[i + 1]
        for i in range(len(seg_cost) - 1)
    ]
    while len(seg_cost) > n:
        i = int(np.argmin(merge_inc))
        merged = seg_cost[i] + seg_cost[i + 1] + merge_inc[i]
        del bounds[i + 1]
        seg_cost[i : i + 2] = [merged]
        del merge_inc[i]
        if i > 0:
            merge_inc[i - 1] = (
                l1_cost(x, bounds[i - 1], bounds[i + 1]) - seg_cost[i - 1] - seg_cost[i]
            )
        if i < len(seg_cost) - 1:
            merge_inc[i] = (
                l1_cost(x, bounds[i], bounds[i + 2]) - seg_cost[i] - seg_cost[i + 1]
            )
    return Segmentation.shared(bounds, d)


def segment_kernelcpd(x, n: int, min_size: int = 2) -> Segmentation:
    """Exact change point placement under the linear-kernel cost.

    Dynamic programming over prefix sums; optimal among all segmentations
    into ``n`` segments of length at least ``min_size``.
    """
    x = as_series(x)
    d, L = x.shape
    check_count(n, L, min_size)
    s1 = np.concatenate([np.zeros((d, 1)), np.cumsum(x, axis=1)], axis=1)
    s2 = np.concatenate([np.zeros(1), np.cumsum((x**2).sum(axis=0))])

    def cost_to(end, starts):
        # scatter of [starts, end) for a vector of starts
        length = end - starts
        lin = s1[:, end][:, None] - s1[:, starts]
        return s2[end] - s2[starts] - (lin**2).sum(axis=0) / length

    inf = np.inf
    # best[k, t]: minimal cost of splitting [0, t) into k + 1 segments
    best = np.full((n, L + 1), inf)
    arg = np.zeros((n, L + 1), dtype=np.int64)
    ends = np.arange(min_size, L + 1)
    best[0, ends] = [cost_to(t, np.array([0]))[0] for t in ends]
    for k in range(1, n):
        for t in range((k + 1) * min_size, L - (n - k - 1) * min_size + 1):
            starts = np.arange(k * min_size, t - min_size + 1)
            vals = best[k - 1, starts] + cost_to(t, starts)
            j = int(np.argmin(vals))
            best[k, t] = vals[j]
            arg[k, t] = starts[j]
    bounds = [L]
    t = L
    for k in range(n - 1, 0, -1):
        t = int(arg[k, t])
        bounds.append(t)
    bounds.append(0)
    return Segmentation.shared(bounds[::-1], d)
