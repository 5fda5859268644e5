"""Segment decompositions of time series and the normalised entropy diagnostic."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..core import as_series
from .base import (
    PER_CHANNEL,
    SHARED,
    Segmentation,
    equal_boundaries,
    normalized_entropy,
    segment_equal,
)
from .changepoint import (
    l1_cost,
    scatter_cost,
    segment_binseg,
    segment_bottomup,
    segment_kernelcpd,
    total_cost,
)
from .clasp import score_profile, segment_clasp
from .gaussian import gaussian_loglik, segment_greedy_gaussian
from .infogain import information_gain, segment_infogain
from .nnsegment import segment_nn

METHODS = (
    "equal",
    "binseg",
    "bottomup",
    "kernelcpd",
    "infogain",
    "greedy_gaussian",
    "nnsegment",
    "clasp",
)

# keyword arguments each method accepts beyond (x, n)
_PARAMS = {
    "equal": (),
    "binseg": ("min_size",),
    "bottomup": ("initial_width",),
    "kernelcpd": ("min_size",),
    "infogain": ("min_size",),
    "greedy_gaussian": ("reg", "min_size"),
    "nnsegment": ("window",),
    "clasp": ("period",),
}


@dataclass(frozen=True)
class SegmentationConfig:
    method: str = "equal"
    n_segments: int = 10
    params: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown segmentation method {self.method!r}")
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        unknown = set(self.params) - set(_PARAMS[self.method])
        if unknown:
            raise ValueError(f"{self.method} does not accept {sorted(unknown)}")

    @property
    def label(self) -> str:
        return self.name or self.method


def segment(x, config: SegmentationConfig) -> Segmentation:
    """Dispatch to the segmentation method named in ``config``."""
    x = as_series(x)
    n = config.n_segments
    p = config.params
    if config.method == "equal":
        return segment_equal(x.shape[1], n, x.shape[0])
    func = {
        "binseg": segment_binseg,
        "bottomup": segment_bottomup,
        "kernelcpd": segment_kernelcpd,
        "infogain": segment_infogain,
        "greedy_gaussian": segment_greedy_gaussian,
        "nnsegment": segment_nn,
        "clasp": segment_clasp,
    }[config.method]
    return func(x, n, **p)


__all__ = [
    "METHODS",
    "PER_CHANNEL",
    "SHARED",
    "Segmentation",
    "SegmentationConfig",
    "equal_boundaries",
    "gaussian_loglik",
    "information_gain",
    "l1_cost",
    "normalized_entropy",
    "scatter_cost",
    "score_profile",
    "segment",
    "segment_binseg",
    "segment_bottomup",
    "segment_clasp",
    "segment_equal",
    "segment_greedy_gaussian",
    "segment_infogain",
    "segment_kernelcpd",
    "segment_nn",
    "total_cost",
]
