from __future__ import annotations

import numpy as np

from ..core import LabeledDataset
from .base import Classifier, class_indices, softmax


class NearestCentroid(Classifier):
    """Softmax over negative, size-normalised Euclidean distances to class
    centroids."""

    name = "nearest_centroid"

    def __init__(self, centroids: np.ndarray, class_names):
        centroids = np.asarray(centroids, dtype=np.float64)
        super().__init__(class_names, centroids.shape[1], centroids.shape[2])
        self.centroids = centroids
        self.centroids.setflags(write=False)
        self._scale = np.sqrt(self.n_channels * self.length)

    def _predict_proba(self, X):
        diff = X[:, None, :, :] - self.centroids[None]
        dist = np.sqrt((diff**2).sum(axis=(2, 3)))
        return softmax(-dist / self._scale)


def train_nearest_centroid(train: LabeledDataset) -> NearestCentroid:
    groups = class_indices(train, train.n_classes)
    centroids = np.stack([train.X[g].mean(axis=0) for g in groups])
    return NearestCentroid(centroids, train.class_names)
