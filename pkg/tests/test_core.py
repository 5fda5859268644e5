import io
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TS_DIR
from segshap.core import (
    LabeledDataset,
    as_series,
    average_instance,
    bump_templates,
    compute_channel_stats,
    concat_channels,
    load_dataset,
    parse_csv,
    parse_ts_file,
    serialize_ts,
    synth_bump_dataset,
)
from segshap.errors import (
    DataRowMismatch,
    EmptyData,
    InvalidGeometry,
    MalformedHeader,
    NonDivisibleColumns,
    NonNumericValue,
    ShapeMismatch,
    UnsupportedFeature,
)


def test_as_series_promotes_1d():
    assert as_series([1, 2, 3]).shape == (1, 3)
    with pytest.raises(ShapeMismatch):
        as_series(np.zeros((1, 2, 3)))


def test_channel_stats_population_std():
    X = np.array([[[0.0, 2.0], [1.0, 1.0]], [[4.0, 6.0], [1.0, 1.0]]])
    ds = LabeledDataset(X, np.array([0, 1]), ("a", "b"))
    stats = compute_channel_stats(ds)
    np.testing.assert_allclose(stats.mean, [3.0, 1.0])
    np.testing.assert_allclose(stats.std, [np.sqrt(5.0), 0.0])
    np.testing.assert_allclose(average_instance(ds), [[2.0, 4.0], [1.0, 1.0]])


def test_empty_dataset_errors():
    ds = LabeledDataset(np.zeros((0, 1, 3)), np.zeros(0, dtype=int), ("a",))
    with pytest.raises(EmptyData):
        compute_channel_stats(ds)
    with pytest.raises(EmptyData):
        average_instance(ds)


def test_concat_channels():
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(concat_channels(x), [[0, 1, 2, 3, 4, 5]])


def test_dataset_is_read_only():
    ds = synth_bump_dataset(4, 1, 10, 2, 2, 0.0, seed=0)
    with pytest.raises(ValueError):
        ds.X[0, 0, 0] = 5.0


def test_with_classes_remaps_by_name():
    ds = LabeledDataset(np.zeros((2, 1, 2)), np.array([0, 1]), ("b", "a"))
    remapped = ds.with_classes(("a", "b"))
    np.testing.assert_array_equal(remapped.y, [1, 0])
    with pytest.raises(DataRowMismatch):
        ds.with_classes(("a",))


# .ts corpus ------------------------------------------------------------------

CORPUS = {
    "valid_univariate.ts": None,
    "valid_multivariate.ts": None,
    "err_unknown_directive.ts": MalformedHeader,
    "err_duplicate_directive.ts": MalformedHeader,
    "err_timestamps.ts": UnsupportedFeature,
    "err_unequal_length.ts": UnsupportedFeature,
    "err_missing_value.ts": UnsupportedFeature,
    "err_short_row.ts": DataRowMismatch,
    "err_unknown_label.ts": DataRowMismatch,
    "err_empty_data.ts": EmptyData,
}


@pytest.mark.parametrize("name,error", sorted(CORPUS.items()))
def test_ts_corpus(name, error):
    path = os.path.join(TS_DIR, name)
    if error is None:
        assert len(load_dataset(path)) > 0
    else:
        with pytest.raises(error):
            load_dataset(path)


def test_ts_univariate_values():
    ds = load_dataset(os.path.join(TS_DIR, "valid_univariate.ts"))
    assert ds.X.shape == (3, 1, 4)
    assert ds.class_names == ("a", "b")
    np.testing.assert_array_equal(ds.y, [0, 1, 0])
    np.testing.assert_array_equal(ds.X[1, 0], [-1.0, 0.5, 0.2, 4.0])


def test_ts_multivariate_channels():
    ds = load_dataset(os.path.join(TS_DIR, "valid_multivariate.ts"))
    assert ds.X.shape == (2, 2, 3)
    np.testing.assert_array_equal(ds.X[0], [[1, 2, 3], [3, 2, 1]])


def test_ts_wrong_channel_count():
    text = "@seriesLength 2\n@univariate false\n@dimensions 2\n@classLabel true a\n@data\n1,2:a\n"
    with pytest.raises(DataRowMismatch):
        parse_ts_file(text)


def test_ts_149_values_under_150():
    row = ",".join(["1"] * 149)
    with pytest.raises(DataRowMismatch):
        parse_ts_file(f"@seriesLength 150\n@classLabel true a\n@data\n{row}:a\n")


def test_ts_unlabelled_rejected():
    with pytest.raises(UnsupportedFeature):
        parse_ts_file("@seriesLength 2\n@classLabel false\n@data\n1,2\n")


def test_ts_multivariate_needs_dimensions():
    with pytest.raises(MalformedHeader):
        parse_ts_file("@univariate false\n@seriesLength 2\n@classLabel true a\n@data\n1,2:a\n")


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(1, 5), d=st.integers(1, 3), L=st.integers(1, 8),
    seed=st.integers(0, 2**16),
)
def test_ts_roundtrip_is_lossless(n, d, L, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d, L)) * 10.0 ** rng.integers(-5, 5)
    y = rng.integers(0, 2, size=n)
    ds = LabeledDataset(X, y, ("neg", "pos"))
    back = parse_ts_file(io.StringIO(serialize_ts(ds)))
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


# csv -------------------------------------------------------------------------


def test_csv_channel_major():
    ds = parse_csv("1,2,3,4,x\n5,6,7,8,y\n9,9,9,9,x\n", d=2)
    assert ds.X.shape == (3, 2, 2)
    np.testing.assert_array_equal(ds.X[0], [[1, 2], [3, 4]])
    assert ds.class_names == ("x", "y")
    np.testing.assert_array_equal(ds.y, [0, 1, 0])


@pytest.mark.parametrize("text,d,error", [
    ("", 1, EmptyData),
    ("1,2,3,a\n", 2, NonDivisibleColumns),
    ("1,abc,a\n", 1, NonNumericValue),
    ("1,2,a\n1,a\n", 1, DataRowMismatch),
])
def test_csv_errors(text, d, error):
    with pytest.raises(error):
        parse_csv(text, d=d)


# synthetic fixture -----------------------------------------------------------


def test_bump_templates_positions():
    t = bump_templates(2, 20, 2, 5)
    np.testing.assert_array_equal(np.flatnonzero(t[0, 0]), np.arange(0, 5))
    np.testing.assert_array_equal(np.flatnonzero(t[1, 0]), np.arange(10, 15))
    assert not t[:, 1].any()


def test_synth_is_seeded_and_balanced():
    a = synth_bump_dataset(10, 1, 20, 2, 5, 0.1, seed=3)
    b = synth_bump_dataset(10, 1, 20, 2, 5, 0.1, seed=3)
    np.testing.assert_array_equal(a.X, b.X)
    assert np.bincount(a.y).tolist() == [5, 5]


def test_synth_noiseless_class_distance():
    ds = synth_bump_dataset(2, 1, 20, 2, 5, 0.0, seed=0)
    # disjoint unit bumps of width bw differ in 2*bw cells
    assert np.sum((ds.X[0] - ds.X[1]) ** 2) == 10.0


def test_synth_geometry_errors():
    with pytest.raises(InvalidGeometry):
        synth_bump_dataset(4, 1, 20, 1, 5, 0.1, seed=0)
    with pytest.raises(InvalidGeometry):
        synth_bump_dataset(4, 1, 20, 3, 7, 0.1, seed=0)
