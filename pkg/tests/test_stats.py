import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynperc.stats import (MIN_BATCHES, batch_covariance, batch_se, batch_variance, linear_fit,
                           mean_se, ratio_se)


def test_mean_se_small():
    assert np.isnan(mean_se([])[0])
    m, s = mean_se([2.0])
    assert m == 2.0 and np.isnan(s)


def test_batch_se_constant_is_zero():
    assert batch_se(np.full(100, 3.0)) == 0.0


def test_batch_se_iid_close_to_naive():
    x = np.random.default_rng(0).normal(size=20000)
    assert abs(batch_se(x) / mean_se(x)[1] - 1) < 0.4


def test_min_batches_enforced():
    x = np.arange(40.0)
    assert batch_se(x, n_batches=2) == batch_se(x, n_batches=MIN_BATCHES)


def test_variance_and_covariance_agree():
    x = np.random.default_rng(1).normal(size=400)
    assert batch_variance(x) == pytest.approx(batch_covariance(x, x))
    assert batch_variance(x)[0] == pytest.approx(np.var(x, ddof=1))


def test_ratio_of_identical_is_one():
    x = np.random.default_rng(2).random(200) + 1
    r, s = ratio_se(x, x)
    assert r == 1.0 and s == 0.0


def test_linear_fit_exact_line():
    f = linear_fit([1, 2, 3, 4], [1, -1, -3, -5])
    assert f.slope == pytest.approx(-2) and f.intercept == pytest.approx(3) and f.r2 == 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=40, max_size=200))
def test_batch_se_non_negative(x):
    assert batch_se(x) >= 0
