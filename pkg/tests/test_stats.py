"""ECDF machinery: KS statistics, DKW bounds, quantile pairs, summaries."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.random import Generator, Philox

from perpsim.errors import InvalidInputError
from perpsim.stats import (
    Ecdf,
    dkw_bound,
    ks_one_sample,
    ks_two_sample,
    qq_points,
    summary,
)

sample_lists = st.lists(
    st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=60
)


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


class TestEcdf:
    def test_evaluation(self):
        e = Ecdf.from_samples([3.0, 1.0, 2.0])
        assert e(0.5) == 0.0
        assert e(1.0) == pytest.approx(1 / 3)
        assert e(2.5) == pytest.approx(2 / 3)
        assert e(9.0) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            Ecdf.from_samples([])


class TestKsOneSample:
    def test_hand_enumerated(self):
        # steps at 0.25 and 0.75 against U[0,1]: all four gaps are 0.25
        assert ks_one_sample([0.25, 0.75], uniform_cdf) == pytest.approx(0.25)

    def test_quantile_grid(self):
        n = 99
        samples = [(k + 1) / (n + 1) for k in range(n)]
        assert ks_one_sample(samples, uniform_cdf) <= 1 / (n + 1) + 1e-12

    def test_single_median(self):
        assert ks_one_sample([0.5], uniform_cdf) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            ks_one_sample([], uniform_cdf)

    def test_dkw_coverage(self):
        # 50 replications at N=1e4: at most 3 exceedances of the 99% radius
        g = Generator(Philox(key=99))
        n = 10_000
        bound = dkw_bound(n, 0.01)
        exceed = sum(
            ks_one_sample(g.random(n), uniform_cdf) > bound for _ in range(50)
        )
        assert exceed <= 3


class TestKsTwoSample:
    def test_identical_sets(self):
        assert ks_two_sample([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_disjoint(self):
        assert ks_two_sample([0.0], [1.0]) == 1.0

    def test_interleaved(self):
        assert ks_two_sample([0.0, 2.0], [1.0, 3.0]) == pytest.approx(0.5)

    @given(sample_lists, sample_lists)
    def test_symmetric_and_bounded(self, a, b):
        d = ks_two_sample(a, b)
        assert d == ks_two_sample(b, a)
        assert 0.0 <= d <= 1.0

    @given(sample_lists)
    def test_self_distance_zero(self, a):
        assert ks_two_sample(a, a) == 0.0


class TestDkwBound:
    def test_large_n(self):
        assert dkw_bound(100_000, 0.01) == pytest.approx(
            math.sqrt(math.log(200.0) / 200_000.0), rel=1e-12
        )

    def test_unit_radius(self):
        assert dkw_bound(1, 2.0 / math.e**2) == pytest.approx(1.0, rel=1e-12)

    def test_delta_near_one(self):
        assert dkw_bound(2, 0.999999) == pytest.approx(
            math.sqrt(math.log(2.0) / 4.0), rel=1e-4
        )

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            dkw_bound(0, 0.5)
        with pytest.raises(InvalidInputError):
            dkw_bound(10, 0.0)


class TestQqPoints:
    def test_uniform_grid(self):
        pts = qq_points(np.linspace(0, 1, 1001), uniform_cdf, 3)
        refs = [r for _, r in pts]
        assert refs == pytest.approx([0.25, 0.5, 0.75], abs=1e-9)

    def test_k_must_exceed_one(self):
        with pytest.raises(InvalidInputError):
            qq_points([1.0, 2.0], uniform_cdf, 1)

    def test_self_consistency(self):
        g = Generator(Philox(key=3))
        n = 20_000
        samples = g.random(n)
        pts = qq_points(samples, uniform_cdf, 19)
        dev = max(abs(e - r) for e, r in pts)
        assert dev < 3 * dkw_bound(n, 0.01)

    def test_reference_samples(self):
        g = Generator(Philox(key=4))
        a, b = g.random(5000), g.random(5000)
        pts = qq_points(a, b, 9)
        dev = max(abs(e - r) for e, r in pts)
        assert dev < 0.05

    def test_flat_cdf_leftmost_root(self):
        def flat(x):
            # jumps to 0.5 on [0, 1), then to 1 at 1
            x = np.asarray(x, dtype=float)
            return np.where(x >= 1.0, 1.0, np.where(x >= 0.0, 0.5, 0.0))

        pts = qq_points([0.1, 0.9], flat, 3)
        # level 0.25 and 0.5 both invert to the leftmost root 0
        assert pts[0][1] == pytest.approx(0.0, abs=1e-9)
        assert pts[1][1] == pytest.approx(0.0, abs=1e-9)
        assert pts[2][1] == pytest.approx(1.0, abs=1e-9)


class TestSummary:
    def test_constant(self):
        s = summary([1.0, 1.0, 1.0])
        assert (s.mean, s.variance) == (1.0, 0.0)

    def test_unbiased(self):
        s = summary([0.0, 2.0])
        assert (s.mean, s.variance) == (1.0, 2.0)

    def test_symmetric(self):
        s = summary([-1.0, 0.0, 1.0])
        assert (s.mean, s.variance, s.min, s.max, s.n) == (0.0, 1.0, -1.0, 1.0, 3)

    def test_single_sample_no_variance(self):
        s = summary([4.0])
        assert s.variance is None

    @given(st.lists(st.floats(min_value=-1e8, max_value=1e8), min_size=2, max_size=200))
    def test_against_numpy(self, xs):
        s = summary(xs)
        assert s.mean == pytest.approx(np.mean(xs), rel=1e-9, abs=1e-9)
        assert s.variance == pytest.approx(np.var(xs, ddof=1), rel=1e-6, abs=1e-6)
