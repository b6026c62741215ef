import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsemix.special import (q_bounds, std_normal_cdf, std_normal_isf, std_normal_logcdf,
                               std_normal_quantile, std_normal_sf)

mpmath.mp.dps = 50


def mp_sf(x):
    return mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2


def mp_isf(q):
    """Root of log Q(x) = log q, solved at 50 digits."""
    q = mpmath.mpf(q)
    if q < 0.5:
        start = mpmath.sqrt(-2 * mpmath.log(q))
    else:
        start = -mpmath.sqrt(-2 * mpmath.log(1 - q))
    return mpmath.findroot(lambda x: mpmath.log(mp_sf(x)) - mpmath.log(q), start)


class TestTail:
    def test_sf_zero(self):
        assert std_normal_sf(0.0) == 0.5

    def test_sf_five(self):
        assert std_normal_sf(5.0) == pytest.approx(2.866515718791939e-07, rel=1e-13)

    @pytest.mark.parametrize("x", [-8.0, -2.5, -0.1, 0.3, 1.0, 4.0, 9.0, 15.0, 25.0, 37.0, 38.0])
    def test_sf_relative_accuracy(self, x):
        ref = float(mp_sf(x))
        assert std_normal_sf(x) == pytest.approx(ref, rel=1e-13)

    def test_sf_beyond_erfc_underflow_stays_positive(self):
        ref = float(mp_sf(39.0))
        assert std_normal_sf(39.0) == pytest.approx(ref, rel=1e-6)

    @given(st.floats(-30, 30))
    def test_cdf_sf_complementary(self, x):
        assert abs(std_normal_cdf(x) + std_normal_sf(x) - 1.0) <= 1e-15

    def test_logcdf_far_left(self):
        ref = float(mpmath.log(mp_sf(40.0)))
        assert std_normal_logcdf(-40.0) == pytest.approx(ref, rel=1e-12)

    def test_vectorised(self):
        x = np.array([0.0, 1.0, 2.0])
        assert np.allclose(std_normal_sf(x), [float(mp_sf(v)) for v in x], rtol=1e-14)


class TestQuantile:
    def test_975(self):
        assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-13)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_rejects_boundary(self, p):
        with pytest.raises(ValueError):
            std_normal_quantile(p)

    @settings(max_examples=300)
    @given(st.floats(-8, 8))
    def test_inverse_of_cdf(self, x):
        # the probability is exact in the tail it lives in
        if x <= 0:
            assert abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-12 * max(1.0, abs(x))
        else:
            assert abs(std_normal_isf(std_normal_sf(x)) - x) <= 1e-12 * max(1.0, x)
            # through the rounded cdf the error is bounded by its conditioning
            slack = 2.0**-53 / math.exp(-0.5 * x * x) * math.sqrt(2 * math.pi)
            assert abs(std_normal_quantile(std_normal_cdf(x)) - x) <= 1e-12 + 2 * slack

    @pytest.mark.parametrize("p", [1e-300, 1e-50, 1e-12, 1e-4, 0.2, 0.5, 0.7, 1 - 1e-9])
    def test_against_mpmath(self, p):
        ref = float(-mp_isf(p))
        assert std_normal_quantile(p) == pytest.approx(ref, rel=1e-13, abs=1e-15)

    @pytest.mark.parametrize("q", [1e-200, 1e-20, 1e-8, 0.01])
    def test_isf_tail(self, q):
        ref = float(mp_isf(q))
        assert std_normal_isf(q) == pytest.approx(ref, rel=1e-13)


class TestQBounds:
    def test_at_one(self):
        lo, hi = q_bounds(1.0)
        assert lo == pytest.approx(0.12098536225957168, rel=1e-14)
        assert hi == pytest.approx(0.24197072451914337, rel=1e-14)
        assert lo <= std_normal_sf(1.0) <= hi

    def test_bracket_grid(self):
        for x in np.round(np.arange(1, 301) * 0.1, 10):
            lo, hi = q_bounds(x)
            q = std_normal_sf(x)
            assert lo <= q <= hi, x

    def test_ratio_at_thirty(self):
        lo, hi = q_bounds(30.0)
        assert hi / lo == pytest.approx(1 + 1 / 900, rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_rejects_nonpositive(self, x):
        with pytest.raises(ValueError):
            q_bounds(x)
