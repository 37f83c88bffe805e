import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from drrd.core import Dataset, RdConfig, assign_treatment, validate_for_estimation
from drrd.errors import CutoffOutOfRange, EmptySide, NonFiniteValue, ShapeMismatch

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_tie_at_cutoff_is_treated():
    c = 0.3
    assert assign_treatment(Dataset([1.0], [c]), c).tolist() == [1]
    assert assign_treatment(Dataset([1.0, 2.0], [c - 0.1, c + 0.1]), c).tolist() == [0, 1]
    assert assign_treatment(Dataset([1.0] * 3, [c] * 3), c).tolist() == [1, 1, 1]


@given(arrays(float, st.integers(1, 30), elements=finite), finite)
def test_assignment_properties(w, c):
    ds = Dataset(np.zeros_like(w), w)
    d = assign_treatment(ds, c)
    assert np.array_equal(d, assign_treatment(Dataset(ds.y, ds.w), c))
    assert np.all(d * (w - c) >= 0)
    assert np.all((1 - d)[d == 0] * (c - w[d == 0]) > 0)
    perm = np.random.default_rng(0).permutation(w.shape[0])
    assert np.array_equal(assign_treatment(ds.take(perm), c), d[perm])


def test_dataset_shapes():
    ds = Dataset([1.0, 2.0], [0.0, 1.0])
    assert ds.z.shape == (2, 0)
    assert Dataset([1.0, 2.0], [0.0, 1.0], [[1.0], [2.0]]).z_dim == 1
    with pytest.raises(ShapeMismatch):
        Dataset([1.0, 2.0], [0.0])
    with pytest.raises(ShapeMismatch):
        Dataset([], [])
    with pytest.raises(ShapeMismatch):
        Dataset([1.0, 2.0], [0.0, 1.0], [[1.0, 2.0, 3.0]])


def test_dataset_is_immutable():
    ds = Dataset([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        ds.y[0] = 5.0


def test_validate_rejects_one_sided():
    ds = Dataset([1.0, 2.0, 3.0], [0.5, 1.0, 2.0])
    with pytest.raises(EmptySide):
        validate_for_estimation(ds, RdConfig(cutoff=0.0))


def test_validate_needs_two_per_side():
    ds = Dataset([1.0, 2.0, 3.0, 4.0], [-1.0, 0.5, 1.0, 2.0])
    with pytest.raises(EmptySide):
        validate_for_estimation(ds, RdConfig(cutoff=0.0))


def test_validate_ok():
    ds = Dataset([1.0, 2.0, 3.0, 4.0], [-1.0, -0.5, 1.0, 2.0], [[0.0]] * 4)
    v = validate_for_estimation(ds, RdConfig(cutoff=0.0))
    assert (v.n_treated, v.n_control) == (2, 2)
    assert v.d.tolist() == [0, 0, 1, 1]


def test_non_finite_rejected():
    with pytest.raises(NonFiniteValue) as info:
        validate_for_estimation(Dataset([1.0, np.nan, 0.0, 1.0], [-1, -0.5, 0.5, 1]), RdConfig())
    assert info.value.location == "y[1]"
    with pytest.raises(NonFiniteValue):
        Dataset([1.0], [np.inf])
    with pytest.raises(NonFiniteValue):
        validate_for_estimation(Dataset([1.0] * 4, [-1, -0.5, 0.5, 1]), RdConfig(cutoff=np.nan))


def test_cutoff_range_error_code():
    assert CutoffOutOfRange("x").code == "CutoffOutOfRange"
