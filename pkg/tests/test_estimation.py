import math
import warnings

import mpmath
import numpy as np
import pytest

from sparsemix.detectors import Detector, LRTDetector, MaxDetector, make_detector, max_test_error_probs
from sparsemix.estimation import (CalibrationMethod, DegenerateThresholdWarning, ErrorKind, Method,
                                  calibrate_threshold, estimate_direct, estimate_importance,
                                  merge_estimates, simulate_statistics, stream_key)
from sparsemix.models import DiscreteModel, GaussianModel, Hypothesis, ModelParams, SparseR, StreamPurpose

from oracles import enumerate_lrt_errors

mpmath.mp.dps = 40


class Always(Detector):
    name = "always"

    def __init__(self, value=1.0):
        super().__init__(0.0)
        self.value = value

    def statistic(self, samples):
        return self.value

    def statistics(self, batch):
        return np.full(len(batch), self.value)


class TestDirect:
    def test_always_reject(self):
        est = estimate_direct(Always(), GaussianModel(5, 0.1, 1.0), Hypothesis.NULL, 50, 0)
        assert est.p_hat == 1.0 and est.std_err == 0.0 and est.kind is ErrorKind.FA

    def test_table_one_false_alarm(self):
        m = ModelParams(0.6, SparseR(0.19)).model(1000)
        est = estimate_direct(LRTDetector(m), m, Hypothesis.NULL, 10**5, 1)
        assert abs(est.p_hat - 0.213) <= 3 * est.std_err

    def test_max_against_analytic(self):
        m = GaussianModel(100, 0.1, 2.0)
        fa, md = max_test_error_probs(100, 0.1, 2.0, 2.0)
        det = MaxDetector(2.0)
        e_fa = estimate_direct(det, m, Hypothesis.NULL, 20000, 3)
        e_md = estimate_direct(det, m, Hypothesis.ALTERNATIVE, 20000, 3)
        assert abs(e_fa.p_hat - fa) <= 3 * e_fa.std_err
        assert abs(e_md.p_hat - md) <= 3 * max(e_md.std_err, math.sqrt(md * (1 - md) / 20000))


class TestImportance:
    def test_eps_zero_equals_direct(self):
        m = GaussianModel(30, 0.0, 2.0)
        det = LRTDetector(m)
        for hyp in Hypothesis:
            kind = ErrorKind.under(hyp)
            direct = estimate_direct(det, m, hyp, 500, 4)
            imp = estimate_importance(det, m, kind, 500, 4)
            assert imp.p_hat == direct.p_hat and imp.stream == direct.stream

    def test_eps_zero_same_draws(self):
        m = GaussianModel(30, 0.0, 2.0)
        det = MaxDetector(1.0)
        key = stream_key(StreamPurpose.EVALUATION, 30, ErrorKind.FA)
        a = simulate_statistics(det, m, Hypothesis.NULL, 100, 4, key)
        b = simulate_statistics(det, m, Hypothesis.ALTERNATIVE, 100, 4, key)
        assert np.array_equal(a, b)

    def test_toy_against_enumeration(self):
        model = DiscreteModel.discretized_gaussian(2, 0.2, 1.5)
        fa, md = enumerate_lrt_errors(model)
        det = LRTDetector(model)
        e_fa = estimate_importance(det, model, "fa", 200_000, 8)
        e_md = estimate_importance(det, model, "md", 200_000, 8)
        assert abs(e_fa.p_hat - fa) <= 4 * e_fa.std_err
        assert abs(e_md.p_hat - md) <= 4 * e_md.std_err
        assert e_fa.rel_err < 5e-3 and e_md.rel_err < 5e-3

    def test_change_of_measure_normalised(self):
        m = GaussianModel(200, 0.05, 1.5)
        est = estimate_importance(LRTDetector(m, -np.inf), m, "fa", 20000, 5)
        assert abs(est.p_hat - 1.0) <= 3 * est.std_err

    def test_requires_llr(self):
        with pytest.raises(TypeError):
            estimate_importance(MaxDetector(1.0), GaussianModel(5, 0.1, 1.0), "fa", 10, 0)

    def test_needs_two_trials(self):
        m = GaussianModel(5, 0.1, 1.0)
        with pytest.raises(ValueError):
            estimate_importance(LRTDetector(m), m, "md", 1, 0)

    def test_strong_regime_tail(self):
        m = ModelParams(0.6, SparseR(0.66)).model(1000)
        det = LRTDetector(m)
        e_fa = estimate_importance(det, m, "fa", 20000, 2)
        e_md = estimate_importance(det, m, "md", 20000, 2)
        assert abs(e_fa.p_hat - 7.63e-3) <= 3 * e_fa.std_err + 5e-4
        assert abs(e_md.p_hat - 1.36e-2) <= 3 * e_md.std_err + 5e-4


class TestReproducibility:
    def test_merge_equals_full(self):
        m = GaussianModel(40, 0.1, 1.8)
        det = LRTDetector(m)
        for est in (estimate_direct, lambda *a, **k: estimate_importance(a[0], a[1], "md", *a[3:], **k)):
            full = est(det, m, Hypothesis.ALTERNATIVE, 1000, 6)
            a = est(det, m, Hypothesis.ALTERNATIVE, 500, 6)
            b = est(det, m, Hypothesis.ALTERNATIVE, 500, 6, trial_offset=500)
            merged = merge_estimates(b, a)
            assert merged.trials == full.trials
            assert merged.p_hat == pytest.approx(full.p_hat, rel=1e-14, abs=0)
            assert merged.std_err == pytest.approx(full.std_err, rel=1e-9)

    def test_merge_rejects_foreign(self):
        m = GaussianModel(10, 0.1, 1.0)
        det = LRTDetector(m)
        a = estimate_direct(det, m, Hypothesis.NULL, 100, 1)
        b = estimate_direct(det, m, Hypothesis.NULL, 100, 2, trial_offset=100)
        with pytest.raises(ValueError):
            merge_estimates(a, b)
        c = estimate_direct(det, m, Hypothesis.NULL, 100, 1, trial_offset=300)
        with pytest.raises(ValueError):
            merge_estimates(a, c)

    @pytest.mark.parametrize("kind", ["lrt", "hc", "acw", "max"])
    def test_thread_count_invariant(self, kind):
        m = GaussianModel(300, 0.05, 2.0)
        det = make_detector(kind, m, 1.0)
        key = stream_key(StreamPurpose.EVALUATION, 300, ErrorKind.MD)
        a = simulate_statistics(det, m, Hypothesis.ALTERNATIVE, 257, 9, key, threads=1)
        b = simulate_statistics(det, m, Hypothesis.ALTERNATIVE, 257, 9, key, threads=4)
        assert np.array_equal(a, b)

    def test_streams_disjoint(self):
        assert stream_key(StreamPurpose.CALIBRATION, 10, ErrorKind.FA) != stream_key(
            StreamPurpose.EVALUATION, 10, ErrorKind.FA)


class TestCalibration:
    def test_analytic_max(self):
        cal = calibrate_threshold("max", GaussianModel(10, 0.1, 1.0), 0.05, None, 0,
                                  method=CalibrationMethod.ANALYTIC_MAX)
        ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf("0.95") ** mpmath.mpf("0.1") - 1))
        assert cal.threshold == pytest.approx(ref, rel=1e-13)

    def test_analytic_only_for_max(self):
        with pytest.raises(ValueError):
            calibrate_threshold("hc", GaussianModel(10, 0.1, 1.0), 0.05, None, 0, method="analytic_max")

    def test_constant_statistic_degenerate(self):
        with pytest.warns(DegenerateThresholdWarning):
            cal = calibrate_threshold(Always(2.5), GaussianModel(4, 0.1, 1.0), 0.5, 100, 0)
        assert cal.threshold == 2.5 and cal.degenerate and cal.achieved_fa == 1.0

    def test_insufficient_sims(self):
        with pytest.raises(ValueError):
            calibrate_threshold("lrt", GaussianModel(4, 0.1, 1.0), 0.05, 199, 0)
        with pytest.raises(ValueError):
            calibrate_threshold("lrt", GaussianModel(4, 0.1, 1.0), 1.0, 1000, 0)

    @pytest.mark.parametrize("sims,level", [(1000, 0.05), (999, 0.05), (1234, 0.1), (400, 0.025)])
    def test_order_statistic_invariant(self, sims, level):
        m = GaussianModel(20, 0.1, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cal = calibrate_threshold("lrt", m, level, sims, 3)
        key = stream_key(StreamPurpose.CALIBRATION, 20, ErrorKind.FA)
        stats = np.sort(simulate_statistics(LRTDetector(m), m, Hypothesis.NULL, sims, 3, key))
        assert np.mean(stats >= cal.threshold) <= level
        lower = stats[stats < cal.threshold].max()
        assert np.mean(stats >= lower) > level
        assert cal.achieved_fa == np.mean(stats >= cal.threshold)

    def test_hc_fresh_seed_false_alarm(self):
        m = GaussianModel(1000, 0.01, 1.0)
        cal = calibrate_threshold("hc", m, 0.05, 10**5, 12)
        fresh = estimate_direct(make_detector("hc", m, cal.threshold), m, Hypothesis.NULL, 20000, 13)
        assert 0.045 <= fresh.p_hat <= 0.055
        assert fresh.method is Method.DIRECT
