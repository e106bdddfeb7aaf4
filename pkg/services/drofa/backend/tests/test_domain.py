import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backend.app.core.exceptions import (
    DimensionMismatch,
    EmptyVector,
    NegativeEntry,
    NonFiniteInput,
    SumOutOfTolerance,
)
from backend.app.models.domain import (
    IterateAverager,
    MixtureWeights,
    ModelParams,
    averaged_mixture,
    averager_push,
    renormalize_exact,
    validate_mixture,
)


@pytest.mark.parametrize("raw", [[0.25, 0.25, 0.5], [1.0], [0.0, 1.0]])
def test_validate_mixture_accepts_feasible(raw):
    lam = validate_mixture(raw)
    assert lam.to_list() == raw


def test_validate_mixture_rejects_bad_sum():
    with pytest.raises(SumOutOfTolerance) as info:
        validate_mixture([0.7, 0.4])
    assert info.value.actual_sum == pytest.approx(1.1)


def test_validate_mixture_reports_first_negative_index():
    with pytest.raises(NegativeEntry) as info:
        validate_mixture([0.5, -0.25, 0.75])
    assert info.value.index == 1


def test_validate_mixture_rejects_empty_and_nan():
    with pytest.raises(EmptyVector):
        validate_mixture([])
    with pytest.raises(NonFiniteInput):
        validate_mixture([float("nan"), 1.0])


def test_model_params_are_immutable_and_finite():
    w = ModelParams([1.0, 2.0])
    assert w.dim == 2
    with pytest.raises(ValueError):
        w.values[0] = 3.0
    with pytest.raises(NonFiniteInput):
        ModelParams([0.0, float("inf")])


def test_uniform_and_vertex():
    assert MixtureWeights.uniform(4).to_list() == [0.25] * 4
    assert MixtureWeights.vertex(3, 2).to_list() == [0.0, 0.0, 1.0]


# =============================================================================
# IterateAverager
# =============================================================================


def test_averager_two_point_mean():
    acc = IterateAverager()
    averager_push(acc, [2.0, 0.0])
    averager_push(acc, [0.0, 2.0])
    np.testing.assert_array_equal(acc.mean(), [1.0, 1.0])


@pytest.mark.parametrize("k", [1, 2, 7])
def test_averager_copies_of_same_vector(k):
    acc = IterateAverager()
    for _ in range(k):
        acc.push([0.5, -1.5])
    np.testing.assert_allclose(acc.mean(), [0.5, -1.5], atol=1e-15)
    assert acc.count == k


def test_averager_push_sum_counts():
    acc = IterateAverager().push_sum([6.0, 3.0], 3)
    np.testing.assert_array_equal(acc.mean(), [2.0, 1.0])
    # count 0 은 무시
    acc.push_sum([100.0, 100.0], 0)
    assert acc.count == 3


def test_averager_dimension_mismatch():
    acc = IterateAverager().push([1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        acc.push([1.0, 2.0, 3.0])


def test_averager_empty_mean():
    with pytest.raises(EmptyVector):
        IterateAverager().mean()


def test_averaged_mixture_stays_on_simplex():
    acc = IterateAverager()
    for lam in ([0.1, 0.2, 0.7], [1 / 3, 1 / 3, 1 / 3], [0.0, 0.5, 0.5]):
        acc.push(lam)
    validate_mixture(averaged_mixture(acc).values)


@given(
    st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
        min_size=1,
        max_size=20,
    ).filter(lambda xs: sum(xs) > 1e-6)
)
def test_renormalize_exact_keeps_mixture_valid(xs):
    raw = np.array(xs) / math.fsum(xs)
    out = renormalize_exact(raw)
    assert np.all(out >= 0.0)
    assert abs(math.fsum(out.tolist()) - 1.0) <= 1e-15
