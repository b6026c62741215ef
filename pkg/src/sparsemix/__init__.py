"""Sparse mixture detection in the Gaussian location model.

Models and likelihood ratios, the oracle LRT and adaptive tests (max, Higher
Criticism, ACW sign test), Monte Carlo and importance-sampled error
estimates, regime classification against the detection boundary, and slope
fits of log error probabilities against rate functions.
"""

from .detectors import (ACWDetector, HCDetector, HcConfig, LRTDetector, MaxDetector, acw_statistic,
                        hc_statistic, lrt_statistic, make_detector, max_statistic,
                        max_test_error_probs, max_test_threshold)
from .estimation import (CalibratedThreshold, DegenerateThresholdWarning, ErrorEstimate, ErrorKind,
                         calibrate_threshold, estimate_direct, estimate_importance, merge_estimates)
from .models import (DensePower, DiscreteModel, Explicit, GaussianModel, Hypothesis, ModelParams,
                     SparseR, chi2_divergence, llr, log_likelihood_ratio_single, sample, trial_rng)
from .rates import RateFit, RatePoint, compare_to_theory, fit_rate
from .regimes import (Regime, RegimeClass, check_weak_conditions, classify, critical_r, log_rate_g,
                      rate_g, universal_md_bound)
from .special import (q_bounds, std_normal_cdf, std_normal_isf, std_normal_pdf, std_normal_quantile,
                      std_normal_sf)

__version__ = "0.1.0"
