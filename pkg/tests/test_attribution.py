import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segshap.attribution import (
    NORMALIZED,
    REPLICATED,
    BackgroundSet,
    SegmentAttribution,
    background_average,
    background_zero,
    expand,
    mask_replace,
    normalize_to_timepoints,
    permutation_rng,
    replicate_to_timepoints,
    shapley_exact,
    shapley_sampling,
)
from segshap.errors import InvalidFeature, InvalidPermutationCount, ShapeMismatch, TooManyFeatures
from segshap.model import Classifier, train_nearest_centroid
from segshap.segmentation import PER_CHANNEL, Segmentation, segment_equal


class LinearGame(Classifier):
    """Probability of class 0 equals the plain sum of the series."""

    def __init__(self, d, L):
        super().__init__(("sum", "rest"), d, L)

    def _predict_proba(self, X):
        s = X.sum(axis=(1, 2))
        return np.stack([s, 1.0 - s], axis=1)


class ProductGame(Classifier):
    """Non-additive game: product of segment means, squashed into [0, 1]."""

    def __init__(self, L):
        super().__init__(("p", "q"), 1, L)

    def _predict_proba(self, X):
        v = np.tanh(X[:, 0, :2].mean(axis=1) * X[:, 0, 2:].mean(axis=1)) * 0.5 + 0.5
        return np.stack([v, 1 - v], axis=1)


def permutation_oracle(model, x, seg, bg, cls):
    # Shapley values by enumerating every ordering of the players
    F = seg.n_features
    fmap = seg.feature_map()

    def value(active):
        keep = np.isin(fmap, list(active))
        xs = np.where(keep, x, bg)
        return model.predict_proba(xs[None])[0, cls]

    phi = np.zeros(F)
    perms = list(itertools.permutations(range(F)))
    for order in perms:
        active = set()
        prev = value(active)
        for j in order:
            active.add(j)
            cur = value(active)
            phi[j] += cur - prev
            prev = cur
    return phi / len(perms)


def test_linear_game_exact():
    model = LinearGame(1, 4)
    x = np.array([[1.0, 2.0, 3.0, 4.0]])
    seg = Segmentation.shared([0, 2, 4])
    bg = background_zero(1, 4)
    np.testing.assert_allclose(shapley_exact(model, x, seg, bg, cls=0).values, [3.0, 7.0])
    for m in (1, 2, 7):
        attr = shapley_sampling(model, x, seg, bg, cls=0, m=m, seed=11)
        np.testing.assert_allclose(attr.values, [3.0, 7.0], atol=1e-12)


def test_exact_matches_permutation_oracle():
    rng = np.random.default_rng(4)
    model = ProductGame(6)
    seg = Segmentation.shared([0, 1, 2, 4, 6])
    x = rng.normal(size=(1, 6))
    bg = BackgroundSet(rng.normal(size=(2, 1, 6)))
    exact = shapley_exact(model, x, seg, bg, cls=0)
    oracle = sum(permutation_oracle(model, x, seg, b, 0) for b in bg.instances) / 2
    np.testing.assert_allclose(exact.values, oracle, atol=1e-12)


def test_sampling_converges_and_is_efficient(bumps):
    train, test = bumps
    model = train_nearest_centroid(train)
    seg = segment_equal(100, 6)
    bg = background_average(train)
    x = test.X[3]
    exact = shapley_exact(model, x, seg, bg)
    approx = shapley_sampling(model, x, seg, bg, m=400, seed=1)
    assert np.abs(exact.values - approx.values).max() < 0.01
    for attr in (exact, approx):
        assert attr.values.sum() == pytest.approx(attr.full_value - attr.base_value, abs=1e-9)


def test_sampling_is_seeded(centroid, bumps):
    x = bumps[1].X[0]
    seg = segment_equal(100, 10)
    bg = background_zero(1, 100)
    a = shapley_sampling(centroid, x, seg, bg, m=5, seed=3)
    b = shapley_sampling(centroid, x, seg, bg, m=5, seed=3)
    c = shapley_sampling(centroid, x, seg, bg, m=5, seed=4)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_permutation_streams_are_independent_of_m():
    # the first permutations of a long run equal those of a short run
    short = [permutation_rng(9, p).permutation(8) for p in range(3)]
    long = [permutation_rng(9, p).permutation(8) for p in range(10)]
    for s, l in zip(short, long):
        np.testing.assert_array_equal(s, l)


def test_exact_limits_and_counts(centroid, bumps):
    x = bumps[1].X[0]
    with pytest.raises(TooManyFeatures):
        shapley_exact(centroid, x, segment_equal(100, 13), background_zero(1, 100))
    with pytest.raises(InvalidPermutationCount):
        shapley_sampling(centroid, x, segment_equal(100, 4), background_zero(1, 100), m=0)
    with pytest.raises(ShapeMismatch):
        shapley_sampling(centroid, x, segment_equal(100, 4), background_zero(1, 50))


def test_mask_replace():
    seg = Segmentation(((0, 2, 4), (0, 3, 4)), PER_CHANNEL)
    x = np.ones((2, 4))
    bg = np.zeros((2, 4))
    out = mask_replace(x, bg, {(0, 1), (1, 0)}, seg)
    np.testing.assert_array_equal(out, [[0, 0, 1, 1], [1, 1, 1, 0]])
    out2 = mask_replace(x, bg, np.array([False, True, True, False]), seg)
    np.testing.assert_array_equal(out, out2)
    with pytest.raises(InvalidFeature):
        mask_replace(x, bg, {(0, 2)}, seg)
    with pytest.raises(ShapeMismatch):
        mask_replace(x, np.zeros((2, 5)), set(), seg)


def test_average_background(bumps):
    train = bumps[0]
    bg = background_average(train)
    np.testing.assert_allclose(bg.instances[0], train.X.mean(axis=0))
    assert bg.kind == "average"


def random_attribution(rng, d=2):
    bounds = []
    for _ in range(d):
        L = 40
        cps = sorted(rng.choice(np.arange(1, L), size=rng.integers(0, 8), replace=False))
        bounds.append((0, *cps, L))
    seg = Segmentation(tuple(bounds), PER_CHANNEL)
    return SegmentAttribution(rng.normal(size=seg.n_features), 0, 0.5, seg)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_expansion_sums(seed):
    attr = random_attribution(np.random.default_rng(seed))
    seg = attr.segmentation
    norm = normalize_to_timepoints(attr).values
    rep = replicate_to_timepoints(attr).values
    fmap = seg.feature_map()
    for j in range(seg.n_features):
        cells = fmap == j
        assert abs(norm[cells].sum() - attr.values[j]) <= 1e-12
        assert abs(rep[cells].sum() - cells.sum() * attr.values[j]) <= 1e-12


def test_expand_modes_and_json():
    attr = SegmentAttribution(np.array([2.0, -1.0]), 1, 0.3,
                              Segmentation.shared([0, 1, 3]), 5, 7, 1.3)
    np.testing.assert_allclose(expand(attr, NORMALIZED).values, [[2.0, -0.5, -0.5]])
    np.testing.assert_allclose(expand(attr, REPLICATED).values, [[2.0, -1.0, -1.0]])
    with pytest.raises(ValueError):
        expand(attr, "other")
    obj = json.loads(expand(attr, NORMALIZED).to_json())
    assert obj == {
        "explained_class": 1, "base_value": 0.3, "segment_values": [[2.0, -1.0]],
        "timepoint_values": [[2.0, -0.5, -0.5]], "mode": "normalized", "seed": 7,
        "n_permutations": 5,
    }
