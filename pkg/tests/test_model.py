import numpy as np
import pytest

from conftest import fake_command
from segshap.core import LabeledDataset
from segshap.errors import (
    ExternalProtocolError,
    HandshakeFailure,
    MissingClass,
    ProcessExit,
    ProtocolViolation,
    SeriesTooShort,
    ShapeMismatch,
)
from segshap.model import (
    ExternalClassifier,
    build_classifier,
    softmax,
    train_minirocket_ridge,
    train_nearest_centroid,
)
from segshap.model.minirocket import (
    KERNEL_POSITIONS,
    _conv_outputs,
    dilations_for,
    kernel_weights,
    ridge_fit,
)


def test_softmax_rows_sum_to_one():
    p = softmax(np.array([[1000.0, 1000.0], [0.0, np.log(3.0)]]))
    np.testing.assert_allclose(p, [[0.5, 0.5], [0.25, 0.75]])


def test_nearest_centroid_direct_formula(bumps):
    train, test = bumps
    model = train_nearest_centroid(train)
    x = test.X[0]
    cents = [train.X[train.y == c].mean(axis=0) for c in range(2)]
    dist = np.array([np.linalg.norm(x - c) for c in cents]) / np.sqrt(100)
    expected = np.exp(-dist) / np.exp(-dist).sum()
    np.testing.assert_allclose(model.predict_proba(x[None])[0], expected, rtol=1e-12)
    assert (model.predict(test.X) == test.y).all()


def test_predict_proba_batch_shapes(centroid):
    assert centroid.predict_proba([]).shape == (0, 2)
    assert centroid.predict_proba(np.zeros((1, 100))).shape == (1, 2)
    with pytest.raises(ShapeMismatch):
        centroid.predict_proba(np.zeros((3, 1, 99)))


def test_predict_proba_is_row_independent(centroid, bumps):
    X = bumps[1].X[:5]
    whole = centroid.predict_proba(X)
    single = np.vstack([centroid.predict_proba(x[None]) for x in X])
    np.testing.assert_allclose(whole, single, rtol=0, atol=1e-15)


def test_missing_class_rejected():
    ds = LabeledDataset(np.zeros((2, 1, 10)), np.array([0, 0]), ("a", "b"))
    with pytest.raises(MissingClass):
        train_nearest_centroid(ds)


# minirocket -----------------------------------------------------------------------


def test_kernel_weights_sum_to_zero():
    w = kernel_weights()
    assert w.shape == (84, 9)
    np.testing.assert_array_equal(w.sum(axis=1), 0.0)
    assert len({tuple(p) for p in KERNEL_POSITIONS}) == 84


def test_conv_matches_direct_convolution():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(2, 2, 30))
    mask = np.ones((84, 2))
    mask[::2, 1] = 0.0
    out = _conv_outputs(X, 2, mask)
    w = kernel_weights()
    for k in (0, 17, 83):
        for i in range(2):
            sig = (X[i] * mask[k][:, None]).sum(axis=0)
            direct = [sum(w[k, j] * sig[t + 2 * j] for j in range(9)) for t in range(30 - 16)]
            np.testing.assert_allclose(out[k, i], direct, atol=1e-12)


def test_dilations():
    assert dilations_for(100).tolist() == [1, 2, 4, 8]
    assert dilations_for(9).tolist() == [1]
    with pytest.raises(SeriesTooShort):
        dilations_for(8)


def test_ridge_primal_equals_dual():
    rng = np.random.default_rng(1)
    F = rng.normal(size=(5, 12))
    Y = rng.normal(size=(5, 2))
    mean, coef, icpt = ridge_fit(F, Y, 0.7)
    Fc, Yc = F - mean, Y - Y.mean(axis=0)
    primal = np.linalg.solve(Fc.T @ Fc + 0.7 * np.eye(12), Fc.T @ Yc)
    np.testing.assert_allclose(coef, primal, atol=1e-10)
    np.testing.assert_allclose(icpt, Y.mean(axis=0))


def test_minirocket_fits_bumps(bumps):
    train, test = bumps
    model = train_minirocket_ridge(train, seed=0)
    assert model.n_features == 672
    assert (model.predict(test.X) == test.y).all()
    again = train_minirocket_ridge(train, seed=0)
    np.testing.assert_array_equal(model.predict_proba(test.X), again.predict_proba(test.X))
    np.testing.assert_allclose(model.predict_proba(test.X).sum(axis=1), 1.0)


def test_minirocket_multichannel(small_bumps):
    train, test = small_bumps
    model = train_minirocket_ridge(train, n_features=200, seed=3)
    assert model.predict_proba(test.X).shape == (6, 3)


# external process ---------------------------------------------------------------------


def test_external_roundtrip():
    with ExternalClassifier(fake_command()) as model:
        assert model.class_names == ("lo", "hi")
        p = model.predict_proba(np.array([[[1.0] * 6], [[-1.0] * 6]]))
        assert p[0, 1] > 0.5 > p[1, 1]
        assert model.predict_proba([]).shape == (0, 2)


@pytest.mark.parametrize("mode,error", [
    ("bad_info", HandshakeFailure),
    ("die", ProcessExit),
    ("garbage", ProtocolViolation),
    ("error", ExternalProtocolError),
    ("unnormalised", ProtocolViolation),
    ("wrong_shape", ProtocolViolation),
])
def test_external_misbehaviour(mode, error):
    if mode == "bad_info":
        with pytest.raises(error):
            ExternalClassifier(fake_command(mode))
        return
    with ExternalClassifier(fake_command(mode)) as model:
        with pytest.raises(error):
            model.predict_proba(np.zeros((1, 1, 6)))


def test_external_missing_binary():
    with pytest.raises(HandshakeFailure):
        ExternalClassifier("/nonexistent/classifier-binary")


def test_build_classifier_dispatch(bumps):
    train = bumps[0]
    assert build_classifier("nearest_centroid", train).name == "nearest_centroid"
    with pytest.raises(ValueError):
        build_classifier("svm", train)
    # external model built for length 6 cannot serve length-100 data
    with pytest.raises(ValueError):
        build_classifier("external:" + fake_command(), train)
