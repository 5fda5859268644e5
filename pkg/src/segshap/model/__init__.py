"""Black-box classifiers: two trainable built-ins and an external process client."""

from ..core import LabeledDataset
from .base import Classifier, softmax
from .centroid import NearestCentroid, train_nearest_centroid
from .external import ExternalClassifier, connect_external
from .minirocket import MiniRocketRidge, train_minirocket_ridge

BUILTINS = {
    "nearest_centroid": "softmax over negative distances to class centroids",
    "minirocket": "reduced MiniRocket PPV features with a one-vs-rest ridge",
}


def predict_proba(handle: Classifier, batch):
    return handle.predict_proba(batch)


def build_classifier(spec: str, train: LabeledDataset, seed: int = 0, **options) -> Classifier:
    """Resolve ``nearest_centroid``, ``minirocket`` or ``external:<command>``."""
    if spec == "nearest_centroid":
        return train_nearest_centroid(train)
    if spec == "minirocket":
        return train_minirocket_ridge(train, seed=seed, **options)
    if spec.startswith("external:"):
        handle = connect_external(spec[len("external:"):])
        if handle.n_channels != train.n_channels or handle.length != train.length:
            handle.close()
            raise ValueError(
                f"external classifier expects ({handle.n_channels}, {handle.length}) series, "
                f"data has ({train.n_channels}, {train.length})"
            )
        return handle
    raise ValueError(f"unknown classifier {spec!r}")


__all__ = [
    "BUILTINS",
    "Classifier",
    "ExternalClassifier",
    "MiniRocketRidge",
    "NearestCentroid",
    "build_classifier",
    "connect_external",
    "predict_proba",
    "softmax",
    "train_minirocket_ridge",
    "train_nearest_centroid",
]
