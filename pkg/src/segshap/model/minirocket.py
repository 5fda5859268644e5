"""A reduced MiniRocket transform followed by a closed-form ridge classifier."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..core import LabeledDataset
from ..errors import SeriesTooShort
from .base import Classifier, class_indices, softmax

KERNEL_LENGTH = 9
# all C(9, 3) placements of the three +2 weights; the other six weights are -1
KERNEL_POSITIONS = np.array(list(combinations(range(KERNEL_LENGTH), 3)), dtype=np.int64)
N_KERNELS = len(KERNEL_POSITIONS)
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def kernel_weights() -> np.ndarray:
    """``(84, 9)`` weight matrix: -1 everywhere, +2 at three positions."""
    w = -np.ones((N_KERNELS, KERNEL_LENGTH))
    np.put_along_axis(w, KERNEL_POSITIONS, 2.0, axis=1)
    return w


def dilations_for(length: int, max_count: int | None = None) -> np.ndarray:
    """Powers of two whose receptive field ``8 * dilation + 1`` fits in ``length``."""
    if length < KERNEL_LENGTH:
        raise SeriesTooShort(f"length {length} is shorter than the kernel length 9")
    top = int(np.floor(np.log2((length - 1) / (KERNEL_LENGTH - 1))))
    dil = 2 ** np.arange(top + 1)
    if max_count is not None and max_count < dil.size:
        pick = np.unique(np.round(np.linspace(0, top, max(max_count, 1))).astype(int))
        dil = dil[pick]
    return dil.astype(np.int64)


def _conv_outputs(X: np.ndarray, dilation: int, channel_mask: np.ndarray) -> np.ndarray:
    """Valid dilated convolution of every kernel: shape ``(84, n, L - 8 * dilation)``.

    Each kernel sums the channels selected in its row of ``channel_mask``.
    """
    n, d, L = X.shape
    out = L - (KERNEL_LENGTH - 1) * dilation
    shifted = np.stack(
        [X[:, :, k * dilation : k * dilation + out] for k in range(KERNEL_LENGTH)]
    )  # (9, n, d, out)
    per_kernel = np.einsum("kc,oncl->oknl", channel_mask, shifted)  # (9, 84, n, out)
    total = per_kernel.sum(axis=0)
    rows = np.arange(N_KERNELS)
    plus = sum(per_kernel[KERNEL_POSITIONS[:, j], rows] for j in range(3))
    return 3.0 * plus - total


class MiniRocketRidge(Classifier):
    name = "minirocket"

    def __init__(self, class_names, n_channels, length, dilations, channel_masks,
                 biases, feature_mean, coef, intercept):
        super().__init__(class_names, n_channels, length)
        self.dilations = dilations
        self.channel_masks = channel_masks
        self.biases = biases
        self.feature_mean = feature_mean
        self.coef = coef
        self.intercept = intercept

    @property
    def n_features(self) -> int:
        return sum(b.size for b in self.biases)

    def transform(self, X) -> np.ndarray:
        """PPV features of a validated ``(n, d, L)`` batch."""
        return ppv_transform(np.asarray(X, dtype=np.float64), self.dilations,
                             self.channel_masks, self.biases)

    def decision_function(self, X) -> np.ndarray:
        F = self.transform(X)
        return (F - self.feature_mean) @ self.coef + self.intercept

    def _predict_proba(self, X):
        return softmax(self.decision_function(X))


def ppv_transform(X, dilations, channel_masks, biases) -> np.ndarray:
    feats = []
    for dil, mask, bias in zip(dilations, channel_masks, biases):
        conv = _conv_outputs(X, int(dil), mask)  # (84, n, out)
        # bias: (84, q)
        ppv = (conv[:, None, :, :] > bias[:, :, None, None]).mean(axis=3)  # (84, q, n)
        feats.append(ppv.reshape(-1, X.shape[0]).T)
    return np.concatenate(feats, axis=1)


def ridge_fit(F: np.ndarray, Y: np.ndarray, lam: float):
    """Closed-form ridge with an unpenalised intercept.  Returns
    ``(feature_mean, coef, intercept)``."""
    mean = F.mean(axis=0)
    Fc = F - mean
    ymean = Y.mean(axis=0)
    Yc = Y - ymean
    n, p = Fc.shape
    if n < p:
        coef = Fc.T @ np.linalg.solve(Fc @ Fc.T + lam * np.eye(n), Yc)
    else:
        coef = np.linalg.solve(Fc.T @ Fc + lam * np.eye(p), Fc.T @ Yc)
    return mean, coef, ymean


def train_minirocket_ridge(
    train: LabeledDataset, n_features: int = 1000, lam: float = 1.0, seed: int = 0
) -> MiniRocketRidge:
    """Fit the reduced MiniRocket transform and a one-vs-rest ridge on +-1 targets.

    The feature count is rounded down so every (kernel, dilation) pair gets
    the same number of biases.  Biases are quantiles of the convolution
    output of a seeded random training instance, at low-discrepancy levels.
    """
    if n_features < N_KERNELS:
        raise ValueError(f"n_features must be >= {N_KERNELS}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    d, L = train.n_channels, train.length
    class_indices(train, train.n_classes)
    rng = np.random.default_rng(seed)
    dilations = dilations_for(L, max_count=n_features // N_KERNELS)
    per_combo = max(1, n_features // (N_KERNELS * dilations.size))

    masks, biases = [], []
    level = 0
    for dil in dilations:
        mask = np.zeros((N_KERNELS, d))
        for k in range(N_KERNELS):
            n_ch = int(rng.integers(1, min(d, KERNEL_LENGTH) + 1))
            mask[k, rng.choice(d, size=n_ch, replace=False)] = 1.0
        picks = rng.integers(0, len(train), size=N_KERNELS)
        conv = _conv_outputs(train.X[picks], int(dil), mask)  # (84, 84, out)
        own = conv[np.arange(N_KERNELS), np.arange(N_KERNELS)]  # kernel k on instance picks[k]
        q = (_GOLDEN * (level + np.arange(N_KERNELS * per_combo) + 1)) % 1.0
        level += N_KERNELS * per_combo
        bias = np.stack(
            [np.quantile(own[k], q[k * per_combo : (k + 1) * per_combo]) for k in range(N_KERNELS)]
        )
        masks.append(mask)
        biases.append(bias)

    F = ppv_transform(train.X, dilations, masks, biases)
    Y = -np.ones((len(train), train.n_classes))
    Y[np.arange(len(train)), train.y] = 1.0
    mean, coef, intercept = ridge_fit(F, Y, lam)
    return MiniRocketRidge(train.class_names, d, L, dilations, masks, biases, mean, coef, intercept)
