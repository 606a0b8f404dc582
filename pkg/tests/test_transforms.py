from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from chain_core import DrawsError
from transforms import (fold, indicator_interval, indicator_leq, normal_scores, pooled_ranks, quantile,
                        rank_normalize, split_chains)


def test_split_even_and_odd():
    np.testing.assert_array_equal(split_chains([[1, 2, 3, 4]]), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(split_chains([[1, 2, 3, 4, 5]]), [[1, 2], [4, 5]])


def test_split_keeps_first_halves_before_second_halves():
    x = np.arange(10).reshape(2, 5)
    np.testing.assert_array_equal(split_chains(x), [[0, 1], [5, 6], [3, 4], [8, 9]])
    assert split_chains(np.zeros((4, 1000))).shape == (8, 500)


def test_split_needs_four_iterations():
    with pytest.raises(DrawsError):
        split_chains(np.zeros((2, 3)))


@pytest.mark.parametrize("values, expected", [
    ([10, 30, 20], [1, 3, 2]),
    ([1, 1, 2], [1.5, 1.5, 3]),
    ([5, 5, 5, 5], [2.5, 2.5, 2.5, 2.5]),
])
def test_pooled_ranks_average_ties(values, expected):
    r = pooled_ranks(values)
    np.testing.assert_allclose(r, expected)
    assert r.sum() == len(values) * (len(values) + 1) / 2


def test_normal_scores_reference_values():
    np.testing.assert_allclose(normal_scores([1, 2, 3], 3), [-0.7479, 0.2299, 1.6906], atol=1e-4)
    np.testing.assert_allclose(normal_scores([1, 2, 3], 3),
                               stats.norm.ppf((np.array([1, 2, 3]) - 0.375) / 2.75), atol=1e-12)


def test_normal_scores_finite_and_increasing():
    z = normal_scores(np.arange(1, 10001), 10000)
    assert np.all(np.isfinite(z))
    assert np.all(np.diff(z) > 0)


def test_rank_normalize_invariant_to_increasing_maps(rng):
    x = rng.standard_normal((4, 200))
    z = rank_normalize(x)
    assert z.shape == x.shape
    np.testing.assert_array_equal(rank_normalize(np.exp(x)), z)
    np.testing.assert_array_equal(rank_normalize(x ** 3), z)


def test_rank_normalize_two_small_chains():
    z = rank_normalize([[1, 3], [2, 4]])
    np.testing.assert_allclose(z, normal_scores(np.array([[1, 3], [2, 4]]), 4))


def test_rank_normalize_constant_input_is_flat():
    z = rank_normalize(np.full((2, 5), 7.0))
    assert np.all(z == z.flat[0])


@pytest.mark.parametrize("values, expected", [
    ([-1, 0, 1], [1, 0, 1]),
    ([4, 4, 4], [0, 0, 0]),
    ([1, 2, 3, 10], [1.5, 0.5, 0.5, 7.5]),
])
def test_fold_about_pooled_median(values, expected):
    np.testing.assert_allclose(fold(values), expected)


def test_fold_median_is_mad(rng):
    x = rng.standard_normal((4, 101))
    assert np.isclose(np.median(fold(x)), stats.median_abs_deviation(x, axis=None))


def test_indicator_leq():
    np.testing.assert_array_equal(indicator_leq([1, 2, 3], 2), [1, 1, 0])
    np.testing.assert_array_equal(indicator_leq([1, 2, 3], 0), [0, 0, 0])


def test_indicator_leq_tail_share(rng):
    x = rng.standard_normal(10000)
    assert abs(indicator_leq(x, quantile(x, 0.05)).mean() - 0.05) <= 1e-4


def test_indicator_interval_full_range_excludes_minimum():
    x = np.array([3.0, 1.0, 2.0, 1.0])
    np.testing.assert_array_equal(indicator_interval(x, 0, 1), [1, 0, 1, 0])


def test_equal_probability_intervals_split_draws_evenly(rng):
    x = rng.standard_normal((4, 500))
    k = 20
    means = [indicator_interval(x, i / k, (i + 1) / k).mean() for i in range(k)]
    np.testing.assert_allclose(means, 1 / k, atol=1 / x.size + 1e-12)
    total = sum(indicator_interval(x, i / k, (i + 1) / k) for i in range(k))
    assert total.sum() == x.size - 1


def test_indicator_interval_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        indicator_interval([1.0, 2.0], 0.5, 0.5)


def test_indicator_interval_heavy_ties_gives_zeros():
    ind = indicator_interval(np.ones(10), 0.2, 0.4)
    assert ind.sum() == 0
