from __future__ import annotations

import numpy as np

from ..errors import MissingClass, ShapeMismatch


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Classifier:
    """Black-box probabilistic classifier over ``(d, L)`` series.

    Subclasses implement ``_predict_proba`` on a validated ``(n, d, L)``
    batch; :meth:`predict_proba` handles shape checks and empty batches.
    """

    name = "classifier"

    def __init__(self, class_names, n_channels: int, length: int):
        self.class_names = tuple(str(c) for c in class_names)
        self.n_channels = int(n_channels)
        self.length = int(length)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def _check_batch(self, batch) -> np.ndarray:
        if isinstance(batch, (list, tuple)) and len(batch) == 0:
            return np.empty((0, self.n_channels, self.length))
        X = np.asarray(batch, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[1:] != (self.n_channels, self.length):
            raise ShapeMismatch(
                f"expected instances of shape ({self.n_channels}, {self.length}), "
                f"got batch of shape {X.shape}"
            )
        return X

    def predict_proba(self, batch) -> np.ndarray:
        """Class probabilities, one row per instance, in input order."""
        X = self._check_batch(batch)
        if X.shape[0] == 0:
            return np.empty((0, self.n_classes))
        return self._predict_proba(X)

    def predict(self, batch) -> np.ndarray:
        return np.argmax(self.predict_proba(batch), axis=1)

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return (
            f"{type(self).__name__}(classes={len(self.class_names)}, "
            f"d={self.n_channels}, L={self.length})"
        )


def class_indices(train, n_classes: int):
    """Instance indices per class; raises MissingClass for an empty class."""
    groups = [np.flatnonzero(train.y == c) for c in range(n_classes)]
    for c, g in enumerate(groups):
        if g.size == 0:
            raise MissingClass(f"class {train.class_names[c]!r} has no training instances")
    return groups
