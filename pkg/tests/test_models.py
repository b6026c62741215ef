import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from sparsemix.models import (DensePower, DiscreteModel, Explicit, GaussianModel, Hypothesis,
                              ModelParams, SparseR, chi2_divergence, llr, llr_batch, llr_terms,
                              log_likelihood_ratio_single, sample, trial_rng)

mpmath.mp.dps = 50


def mp_llr(eps, mu, xs):
    eps, mu = mpmath.mpf(eps), mpmath.mpf(mu)
    return float(mpmath.fsum(mpmath.log(1 - eps + eps * mpmath.exp(mu * x - mu * mu / 2)) for x in xs))


class TestParams:
    def test_eps_from_beta(self):
        p = ModelParams(0.6, SparseR(0.19))
        assert p.eps(10**4) == pytest.approx(10**-2.4, rel=1e-14)
        assert p.mu(10**4) == pytest.approx(math.sqrt(2 * 0.19 * math.log(1e4)), rel=1e-15)

    def test_dense_power_zero_is_constant_one(self):
        p = ModelParams(0.4, DensePower(0.0))
        assert p.mu(2 * 10**7) == 1.0

    def test_explicit_lookup(self):
        sig = Explicit([(100, 0.5), (10, 0.7)])
        assert sig.mu(10) == 0.7
        with pytest.raises(KeyError):
            sig.mu(1000)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.3])
    def test_beta_range(self, beta):
        with pytest.raises(ValueError):
            ModelParams(beta, SparseR(0.1))

    def test_sparse_r_positive(self):
        with pytest.raises(ValueError):
            SparseR(0.0)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            GaussianModel(0, 0.1, 1.0)
        with pytest.raises(ValueError):
            GaussianModel(5, 1.5, 1.0)
        with pytest.raises(ValueError):
            GaussianModel(5, 0.1, -1.0)


class TestSingleLLR:
    @pytest.mark.parametrize("mu,x,expected", [(1.0, 0.5, 0.0), (0.0, 3.7, 0.0), (2.0, 3.0, 4.0)])
    def test_values(self, mu, x, expected):
        assert log_likelihood_ratio_single(GaussianModel(1, 0.5, mu), x) == expected

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            log_likelihood_ratio_single(GaussianModel(1, 0.5, 1.0), math.inf)


class TestLLR:
    def test_zero_mu(self):
        assert llr(GaussianModel(3, 0.3, 0.0), [1.0, -2.0, 5.0]) == 0.0

    def test_unit_ratio_single(self):
        assert llr(GaussianModel(1, 0.5, 1.0), [0.5]) == 0.0

    def test_two_sample_example(self):
        expected = math.log(0.9 + 0.1 * math.exp(4)) + math.log(0.9 + 0.1 * math.exp(-4))
        got = llr(GaussianModel(2, 0.1, 2.0), [3.0, -1.0])
        assert got == pytest.approx(mp_llr(0.1, 2.0, [3, -1]), rel=1e-14)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            llr(GaussianModel(3, 0.1, 1.0), [1.0, 2.0])

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            llr(GaussianModel(2, 0.1, 1.0), [1.0, math.nan])

    @given(st.floats(-200, 200), st.floats(0, 10), st.floats(1e-12, 1.0))
    def test_never_overflows(self, x, mu, eps):
        v = llr(GaussianModel(1, eps, mu), [x])
        assert math.isfinite(v)

    @pytest.mark.parametrize("eps,mu,x", [(1e-12, 10.0, 200.0), (1e-3, 10.0, 70.0), (0.9, 3.0, -5.0),
                                          (0.99, 8.0, -40.0), (0.2, 1e-4, 0.3), (1.0, 2.0, -1.0)])
    def test_branches_against_mpmath(self, eps, mu, x):
        assert llr(GaussianModel(1, eps, mu), [x]) == pytest.approx(mp_llr(eps, mu, [x]), rel=1e-12, abs=1e-300)

    @given(st.floats(-30, 30), st.floats(0.01, 5), st.floats(1e-6, 0.99))
    def test_single_sample_matches_formula(self, x, mu, eps):
        m = GaussianModel(1, eps, mu)
        ref = mp_llr(eps, mu, [x])
        assert llr(m, [x]) == pytest.approx(ref, rel=1e-12, abs=1e-15)
        direct = math.log(1 - eps + eps * math.exp(log_likelihood_ratio_single(m, x)))
        assert llr(m, [x]) == pytest.approx(direct, rel=1e-9, abs=1e-12)

    def test_batch_matches_rows(self):
        m = GaussianModel(50, 0.05, 2.5)
        x = trial_rng(3, 0).standard_normal((7, 50)) * 3
        rows = np.array([llr(m, r) for r in x])
        assert np.array_equal(llr_batch(m, x), rows)

    def test_terms_does_not_modify_input(self):
        ell = np.array([0.1, -3.0, 50.0])
        before = ell.copy()
        llr_terms(ell, 0.2)
        assert np.array_equal(ell, before)


class TestChi2:
    def test_values(self):
        assert chi2_divergence(GaussianModel(1, 0.1, 0.0)) == 0.0
        assert chi2_divergence(GaussianModel(1, 0.1, 1.0)) == pytest.approx(math.e - 1, rel=1e-15)

    def test_tiny_mu(self):
        mu = 1e-8
        ref = float(mpmath.expm1(mpmath.mpf(mu) ** 2))
        assert chi2_divergence(GaussianModel(1, 0.1, mu)) == pytest.approx(ref, rel=1e-10)

    def test_monotone(self):
        vals = [chi2_divergence(GaussianModel(1, 0.1, m)) for m in np.linspace(0, 5, 50)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestSampling:
    def test_empty(self):
        assert sample(GaussianModel(1, 0.1, 1.0), Hypothesis.NULL, trial_rng(0), 0).size == 0

    def test_full_mixture_mean(self):
        x = sample(GaussianModel(1, 1.0, 3.0), Hypothesis.ALTERNATIVE, trial_rng(1), 10**6)
        assert abs(x.mean() - 3.0) < 3e-3

    def test_eps_zero_matches_null(self):
        m = GaussianModel(1, 0.0, 2.0)
        a = sample(m, Hypothesis.ALTERNATIVE, trial_rng(5, 1), 10**5)
        b = sample(m, Hypothesis.NULL, trial_rng(5, 1), 10**5)
        assert np.array_equal(a, b)
        c = sample(m, Hypothesis.NULL, trial_rng(6, 1), 10**5)
        assert stats.ks_2samp(a, c).statistic < 0.01

    def test_deterministic(self):
        m = GaussianModel(1, 0.3, 2.0)
        a = sample(m, Hypothesis.ALTERNATIVE, trial_rng(9, 2, 3), 1000)
        b = sample(m, Hypothesis.ALTERNATIVE, trial_rng(9, 2, 3), 1000)
        assert np.array_equal(a, b)

    def test_mixture_distribution(self):
        m = GaussianModel(1, 0.3, 2.0)
        x = sample(m, Hypothesis.ALTERNATIVE, trial_rng(4), 20000)
        cdf = lambda t: 0.7 * stats.norm.cdf(t) + 0.3 * stats.norm.cdf(t - 2.0)
        assert stats.kstest(x, cdf).pvalue > 1e-3

    def test_negative_count(self):
        with pytest.raises(ValueError):
            sample(GaussianModel(1, 0.1, 1.0), Hypothesis.NULL, trial_rng(0), -1)


class TestDiscreteModel:
    def test_pmfs_normalised(self):
        m = DiscreteModel.discretized_gaussian(2, 0.1, 1.5)
        assert m.pmf0.sum() == pytest.approx(1.0) and m.pmf1.sum() == pytest.approx(1.0)
        assert m.grid.size == 41 and m.grid[0] == -5.0 and m.grid[-1] == 5.0

    def test_sampling_frequencies(self):
        m = DiscreteModel.discretized_gaussian(1, 0.4, 1.0, points=5, lo=-2, hi=2)
        x = m.sample(Hypothesis.ALTERNATIVE, trial_rng(2), 200000)
        freq = np.array([(x == g).mean() for g in m.grid])
        assert np.allclose(freq, m.pmf_alt, atol=5e-3)

    def test_off_grid_rejected(self):
        m = DiscreteModel.discretized_gaussian(1, 0.4, 1.0, points=5, lo=-2, hi=2)
        with pytest.raises(ValueError):
            m.log_lr(0.3)
