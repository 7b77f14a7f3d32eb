import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from swipt_relay import channel_from_table, quantize_equiprobable_exponential


def bin_edges(n: int) -> np.ndarray:
    """Quantile edges of the unit-mean exponential, t_i = -ln(1 - i/n)."""
    return -np.log1p(-np.arange(n) / n)


def conditional_means_by_quadrature(n: int) -> np.ndarray:
    """Independent oracle: numerically integrate x e^-x over each bin and
    divide by the bin mass 1/n."""
    edges = bin_edges(n)
    means = np.empty(n)
    for i in range(n):
        lo = edges[i]
        hi = edges[i + 1] if i + 1 < n else np.inf
        mass, _ = quad(lambda x: math.exp(-x), lo, hi)
        moment, _ = quad(lambda x: x * math.exp(-x), lo, hi)
        means[i] = moment / mass
    return means


class TestQuantizer:
    def test_single_bin_is_distribution_mean(self):
        ch = quantize_equiprobable_exponential(1)
        assert ch.gains.tolist() == [1.0]
        assert ch.pmf.tolist() == [1.0]

    def test_two_bins_closed_form(self):
        ch = quantize_equiprobable_exponential(2)
        assert ch.gains == pytest.approx(
            [1.0 - math.log(2.0), 1.0 + math.log(2.0)], abs=1e-14
        )
        assert ch.pmf.tolist() == [0.5, 0.5]

    @pytest.mark.parametrize("n", [2, 3, 7, 25])
    def test_gains_match_quadrature_oracle(self, n):
        ch = quantize_equiprobable_exponential(n)
        assert ch.gains == pytest.approx(conditional_means_by_quadrature(n), rel=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 10, 200])
    def test_unit_mean_preserved(self, n):
        ch = quantize_equiprobable_exponential(n)
        assert abs(ch.mean_gain() - 1.0) <= 1e-9

    @pytest.mark.parametrize("n", [1, 2, 10, 200])
    def test_pmf_exactly_equiprobable(self, n):
        ch = quantize_equiprobable_exponential(n)
        assert np.max(np.abs(ch.pmf - 1.0 / n)) <= 1e-12

    def test_gains_sit_inside_their_bins(self):
        n = 50
        ch = quantize_equiprobable_exponential(n)
        edges = bin_edges(n)
        assert np.all(ch.gains[:-1] > edges[:-1])
        assert np.all(ch.gains[:-1] < edges[1:])
        assert ch.gains[-1] > edges[-1]

    @pytest.mark.parametrize("bad", [0, -3])
    def test_rejects_non_positive_counts(self, bad):
        with pytest.raises(ValueError):
            quantize_equiprobable_exponential(bad)

    @given(st.integers(min_value=1, max_value=400))
    @settings(max_examples=40, deadline=None)
    def test_invariants_hold_for_any_size(self, n):
        ch = quantize_equiprobable_exponential(n)
        assert ch.count == n
        assert np.max(np.abs(ch.pmf - 1.0 / n)) <= 1e-12
        assert abs(ch.mean_gain() - 1.0) <= 1e-9
        assert ch.gains[0] >= 0.0
        assert np.all(np.diff(ch.gains) > 0.0)
        assert ch.max_gain == ch.gains[-1]


class TestChannelFromTable:
    def test_valid_two_state_table(self):
        ch = channel_from_table([0.5, 1.5], [0.5, 0.5])
        assert ch.max_gain == 1.5
        assert ch.count == 2

    def test_rejects_descending_gains(self):
        with pytest.raises(ValueError, match="ascending"):
            channel_from_table([1.0, 0.5], [0.5, 0.5])

    def test_rejects_bad_pmf_sum(self):
        with pytest.raises(ValueError, match="sums to"):
            channel_from_table([1.0], [0.3])

    def test_rejects_non_positive_probability(self):
        with pytest.raises(ValueError, match="positive"):
            channel_from_table([0.5, 1.5], [1.0, 0.0])

    def test_rejects_negative_gain(self):
        with pytest.raises(ValueError):
            channel_from_table([-0.5, 1.5], [0.5, 0.5])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            channel_from_table([0.5, 1.5], [1.0])

    def test_renormalizes_tiny_imbalance(self):
        ch = channel_from_table([0.5, 1.5], [0.5, 0.5 + 4e-10])
        assert abs(float(ch.pmf.sum()) - 1.0) <= 1e-15

    def test_arrays_are_read_only(self):
        ch = channel_from_table([0.5, 1.5], [0.5, 0.5])
        with pytest.raises(ValueError):
            ch.gains[0] = 0.0
        with pytest.raises(ValueError):
            ch.pmf[0] = 0.9
