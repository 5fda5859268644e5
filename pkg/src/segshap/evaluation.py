"""Perturbation-based scoring of timepoint attributions.

InterpretTime perturbs the top-``k`` and bottom-``(1 - k)`` shares of the
positively attributed cells and tracks the normalised drop in the predicted
class probability.  AUC Difference replaces cells, in order of absolute
attribution, with an opposite-class representative (deletion) or the reverse
(insertion).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ChannelStats, LabeledDataset, as_series
from .errors import ShapeMismatch, SingleClassDataset, ZeroBaseProbability

STRATEGIES = ("normal", "global_gaussian", "global_mean", "local_mean")
DEFAULT_K = (0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 1.0)


@dataclass(frozen=True)
class EvalConfig:
    k_schedule: tuple = DEFAULT_K
    aucd_step_fraction: float = 0.04
    local_mean_radius: int = 2
    seed: int = 0

    def __post_init__(self):
        k = tuple(float(v) for v in self.k_schedule)
        if not k or any(not 0 < v <= 1 for v in k) or any(a >= b for a, b in zip(k, k[1:])):
            raise ValueError("k_schedule must be strictly increasing within (0, 1]")
        if not 0 < self.aucd_step_fraction <= 1:
            raise ValueError("aucd_step_fraction must lie in (0, 1]")
        if self.local_mean_radius < 0:
            raise ValueError("local_mean_radius must be >= 0")
        object.__setattr__(self, "k_schedule", k)


@dataclass(frozen=True)
class InterpretTimeResult:
    strategy: str
    k: np.ndarray = field(repr=False)
    top_curve: np.ndarray = field(repr=False)
    bottom_curve: np.ndarray = field(repr=False)
    aucse: float = 0.0
    f_score: float = 0.0
    base_probability: float = 1.0
    no_positive_attributions: bool = False

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "top_curve": [[float(a), float(b)] for a, b in zip(self.k, self.top_curve)],
            "bottom_curve": [[float(a), float(b)] for a, b in zip(self.k, self.bottom_curve)],
            "aucse": self.aucse,
            "f_score": self.f_score,
            "no_positive_attributions": self.no_positive_attributions,
        }


@dataclass(frozen=True)
class AUCDResult:
    fractions: np.ndarray = field(repr=False)
    deletion_curve: np.ndarray = field(repr=False)
    insertion_curve: np.ndarray = field(repr=False)
    audc: float = 0.0
    auic: float = 0.0
    aucd: float = 0.0
    opposite_class: int = -1

    def to_dict(self) -> dict:
        return {
            "deletion_curve": [[float(a), float(b)] for a, b in zip(self.fractions, self.deletion_curve)],
            "insertion_curve": [[float(a), float(b)] for a, b in zip(self.fractions, self.insertion_curve)],
            "audc": self.audc,
            "auic": self.auic,
            "aucd": self.aucd,
            "opposite_class": self.opposite_class,
        }


def _attr_values(attr) -> np.ndarray:
    return np.asarray(getattr(attr, "values", attr), dtype=np.float64)


def _share(fraction: float, total: int) -> int:
    # round first so that e.g. 0.15 * 100 counts 15 cells, not 16
    return min(total, math.ceil(round(fraction * total, 9)))


def trapezoid(y, x) -> float:
    y, x = np.asarray(y, dtype=np.float64), np.asarray(x, dtype=np.float64)
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def perturb_values(strategy: str, x, mask, stats: ChannelStats, rng: np.random.Generator,
                   radius: int = 2) -> np.ndarray:
    """Replace the masked cells of ``x`` according to ``strategy``.

    Stochastic strategies draw a full ``(d, L)`` matrix on every call, so
    the generator advances identically whatever the mask holds.
    """
    x = as_series(x)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise ShapeMismatch(f"mask {mask.shape} does not match series {x.shape}")
    mean = np.asarray(stats.mean, dtype=np.float64).reshape(-1, 1)
    std = np.asarray(stats.std, dtype=np.float64).reshape(-1, 1)
    if mean.shape[0] != x.shape[0] or std.shape[0] != x.shape[0]:
        raise ShapeMismatch("channel statistics do not match the series")
    if strategy == "normal":
        fill = rng.standard_normal(x.shape)
    elif strategy == "global_gaussian":
        fill = mean + std * rng.standard_normal(x.shape)
    elif strategy == "global_mean":
        fill = np.broadcast_to(mean, x.shape)
    elif strategy == "local_mean":
        fill = local_means(x, radius)
    else:
        raise ValueError(f"unknown perturbation strategy {strategy!r}")
    return np.where(mask, fill, x)


def local_means(x: np.ndarray, radius: int) -> np.ndarray:
    """Mean of each channel over ``[t - r, t + r]`` clipped to the series."""
    d, L = x.shape
    c = np.concatenate([np.zeros((d, 1)), np.cumsum(x, axis=1)], axis=1)
    t = np.arange(L)
    lo = np.maximum(t - radius, 0)
    hi = np.minimum(t + radius + 1, L)
    return (c[:, hi] - c[:, lo]) / (hi - lo)


def interpret_time(model, x, attr, strategy: str, stats: ChannelStats,
                   cfg: EvalConfig = EvalConfig()) -> InterpretTimeResult:
    """Score an attribution with InterpretTime for one perturbation strategy.

    AUCSE is the trapezoidal area under the top curve divided by the k
    range.  The F-score is the harmonic mean of AUCSE and one minus the
    normalised area under the bottom curve.
    """
    x = as_series(x)
    a = _attr_values(attr)
    if a.shape != x.shape:
        raise ShapeMismatch(f"attribution {a.shape} does not match series {x.shape}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown perturbation strategy {strategy!r}")
    proba = np.asarray(model.predict_proba(x[None]))[0]
    cls = int(np.argmax(proba))
    s_x = float(proba[cls])
    if not s_x > 0:
        raise ZeroBaseProbability("predicted class has zero probability")
    k = np.asarray(cfg.k_schedule)
    flat = a.ravel()
    order = np.argsort(-flat, kind="stable")
    positive = order[flat[order] > 0]
    n_pos = positive.size
    if n_pos == 0:
        zeros = np.zeros(k.size)
        return InterpretTimeResult(strategy, k, zeros, zeros.copy(), 0.0, 0.0, s_x, True)

    rng = np.random.default_rng(cfg.seed)
    batch = []
    for kv in k:
        n_top = _share(kv, n_pos)
        for cells in (positive[:n_top], positive[n_top:]):
            mask = np.zeros(x.size, dtype=bool)
            mask[cells] = True
            batch.append(perturb_values(strategy, x, mask.reshape(x.shape), stats, rng,
                                        cfg.local_mean_radius))
    s_bar = (s_x - np.asarray(model.predict_proba(np.stack(batch)))[:, cls]) / s_x
    top, bottom = s_bar[0::2], s_bar[1::2]
    # the k range, measured with the same quadrature so a constant curve
    # normalises to exactly that constant
    span = trapezoid(np.ones_like(k), k)
    if span > 0:
        aucse = trapezoid(top, k) / span
        bottom_area = trapezoid(bottom, k) / span
    else:
        aucse, bottom_area = float(top[0]), float(bottom[0])
    b = 1.0 - bottom_area
    f_score = 2 * aucse * b / (aucse + b) if aucse + b != 0 else 0.0
    return InterpretTimeResult(strategy, k, top, bottom, aucse, f_score, s_x, False)


def class_representatives(train: LabeledDataset) -> dict[int, np.ndarray]:
    return {c: train.X[train.y == c].mean(axis=0) for c in np.unique(train.y).tolist()}


def opposite_class_representative(model, train: LabeledDataset, predicted: int):
    """Mean instance of the class whose mean gets the lowest probability for
    ``predicted``.  Returns ``(series, class_index)``."""
    reps = {c: r for c, r in class_representatives(train).items() if c != predicted}
    if not reps:
        raise SingleClassDataset("need at least one class other than the predicted one")
    classes = sorted(reps)
    proba = np.asarray(model.predict_proba(np.stack([reps[c] for c in classes])))[:, predicted]
    best = classes[int(np.argmin(proba))]
    return reps[best], best


def aucd_paths(x, attr, representative, step_fraction: float = 0.04):
    """Deletion and insertion states of the AUCD walk.

    Returns ``(fractions, deletion_states, insertion_states)``; cells are
    ranked by descending absolute attribution, ties by channel then time.
    """
    x = as_series(x)
    rep = as_series(representative)
    a = _attr_values(attr)
    if rep.shape != x.shape or a.shape != x.shape:
        raise ShapeMismatch("series, attribution and representative shapes differ")
    order = np.argsort(-np.abs(a.ravel()), kind="stable")
    total = x.size
    step = max(1, _share(step_fraction, total))
    cuts = list(range(0, total, step)) + [total]
    xf, rf = x.ravel(), rep.ravel()
    deletion, insertion = [], []
    for c in cuts:
        moved = order[:c]
        d_state = xf.copy()
        d_state[moved] = rf[moved]
        i_state = rf.copy()
        i_state[moved] = xf[moved]
        deletion.append(d_state.reshape(x.shape))
        insertion.append(i_state.reshape(x.shape))
    return np.asarray(cuts, dtype=np.float64) / total, deletion, insertion


def aucd(model, x, attr, train: LabeledDataset, cfg: EvalConfig = EvalConfig(),
         representative=None) -> AUCDResult:
    """Deletion/insertion curves against the opposite-class representative.

    Cells are ranked by absolute attribution; ``ceil(step * d * L)`` cells
    change per step.  AUCD = AUIC - AUDC.
    """
    x = as_series(x)
    a = _attr_values(attr)
    if a.shape != x.shape:
        raise ShapeMismatch(f"attribution {a.shape} does not match series {x.shape}")
    cls = int(np.argmax(np.asarray(model.predict_proba(x[None]))[0]))
    if representative is None:
        rep, opp = opposite_class_representative(model, train, cls)
    else:
        rep, opp = representative
    frac, deletion, insertion = aucd_paths(x, a, rep, cfg.aucd_step_fraction)
    proba = np.asarray(model.predict_proba(np.stack(deletion + insertion)))[:, cls]
    n = len(frac)
    del_curve, ins_curve = proba[:n], proba[n:]
    audc, auic = trapezoid(del_curve, frac), trapezoid(ins_curve, frac)
    return AUCDResult(frac, del_curve, ins_curve, audc, auic, auic - audc, int(opp))
