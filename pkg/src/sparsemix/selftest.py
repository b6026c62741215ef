"""Fast oracle checks run by ``sparsemix selftest``.

Each check compares library output with an independent computation
(arbitrary precision, brute force or exact enumeration) and returns
``(name, passed, detail)``.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np

from .detectors import (LRTDetector, acw_statistic, hc_statistic, max_test_error_probs,
                        max_test_threshold)
from .estimation import estimate_importance
from .models import DiscreteModel, StreamPurpose, trial_rng
from .regimes import critical_r
from .special import q_bounds, std_normal_quantile, std_normal_sf

__all__ = ["run_selftest", "brute_hc", "brute_acw", "enumerate_errors"]

mpmath.mp.dps = 40


def brute_hc(x) -> float:
    """HC by explicit per-index terms with p-values from mpmath."""
    n = len(x)
    p = sorted(float(mpmath.ncdf(-mpmath.mpf(float(v)))) for v in x)
    best = -math.inf
    for i in range(1, n + 1):
        pi = p[i - 1]
        if 0.0 < pi < 1.0:
            best = max(best, math.sqrt(n) * (i / n - pi) / math.sqrt(pi * (1.0 - pi)))
    return best


def brute_acw(x) -> float:
    """ACW by recomputing every prefix sum from scratch."""
    order = sorted(range(len(x)), key=lambda i: (-abs(x[i]), i))
    best = -math.inf
    for k in range(1, len(x) + 1):
        s = sum(np.sign(x[order[j]]) for j in range(k))
        best = max(best, s / math.sqrt(k))
    return best


def enumerate_errors(model: DiscreteModel, threshold: float = 0.0) -> tuple[float, float]:
    """Exact (P_FA, P_MD) of the LRT by summing over every outcome in grid^n."""
    p0, p1 = model.pmf0, model.pmf_alt
    lr = model._log_ratio
    fa = md = 0.0
    for idx in itertools.product(range(model.grid.size), repeat=model.n):
        idx = list(idx)
        ell = float(np.sum(np.log1p(model.eps * np.expm1(lr[idx]))))
        q0 = float(np.prod(p0[idx]))
        q1 = float(np.prod(p1[idx]))
        if ell >= threshold:
            fa += q0
        else:
            md += q1
    return fa, md


def _check_quantile():
    worst = 0.0
    for p in (1e-300, 1e-100, 1e-20, 1e-5, 0.01, 0.3, 0.5, 0.9, 0.999999):
        p_mp = mpmath.mpf(p)
        ref = mpmath.findroot(lambda x: mpmath.log(mpmath.ncdf(x)) - mpmath.log(p_mp),
                              -mpmath.sqrt(-2 * mpmath.log(p_mp)) if p < 0.5 else mpmath.mpf(1))
        worst = max(worst, abs(std_normal_quantile(p) - float(ref)) / max(abs(float(ref)), 1.0))
    return "normal quantile vs mpmath", worst < 1e-12, f"max rel err {worst:.2e}"


def _check_sf():
    worst = 0.0
    for x in (-5, -1, 0, 0.5, 3, 10, 20, 30, 37.5):
        ref = float(mpmath.ncdf(-mpmath.mpf(x)))
        worst = max(worst, abs(std_normal_sf(x) - ref) / ref)
    return "normal tail vs mpmath", worst < 1e-12, f"max rel err {worst:.2e}"


def _check_max_roundtrip():
    worst = 0.0
    for n in (10, 1000, 10**6):
        tau = max_test_threshold(n, 0.05)
        worst = max(worst, abs(max_test_error_probs(n, 0.0, 0.0, tau)[0] - 0.05))
    return "max test calibration round trip", worst < 1e-10, f"max abs err {worst:.2e}"


def _check_statistics():
    rng = trial_rng(0, int(StreamPurpose.SELFTEST), 0)
    ok = True
    for _ in range(50):
        x = rng.standard_normal(int(rng.integers(1, 33)))
        ok &= math.isclose(hc_statistic(x), brute_hc(x), rel_tol=1e-9, abs_tol=1e-12)
        ok &= acw_statistic(x) == brute_acw(x)
    return "HC and ACW vs brute force", bool(ok), "50 random instances"


def _check_boundary():
    ok = math.isclose(critical_r(0.75), 0.25) and math.isclose(critical_r(0.75 - 1e-12), 0.25, abs_tol=1e-9)
    qb = all(lo <= std_normal_sf(x) <= hi for x in np.linspace(0.1, 30, 300) for lo, hi in [q_bounds(x)])
    return "boundary continuity and tail bounds", bool(ok and qb), "critical_r(3/4) = 1/4"


def _check_importance():
    model = DiscreteModel.discretized_gaussian(2, 0.2, 1.5, points=9, lo=-3.0, hi=3.0)
    fa, md = enumerate_errors(model)
    det = LRTDetector(model)
    e_fa = estimate_importance(det, model, "fa", 20000, 1, purpose=StreamPurpose.SELFTEST)
    e_md = estimate_importance(det, model, "md", 20000, 1, purpose=StreamPurpose.SELFTEST)
    ok = abs(e_fa.p_hat - fa) <= 4 * e_fa.std_err and abs(e_md.p_hat - md) <= 4 * e_md.std_err
    return "importance sampling vs enumeration", bool(ok), f"fa {e_fa.p_hat:.4g}/{fa:.4g} md {e_md.p_hat:.4g}/{md:.4g}"


def run_selftest() -> list[tuple[str, bool, str]]:
    checks = (_check_quantile, _check_sf, _check_max_roundtrip, _check_statistics,
              _check_boundary, _check_importance)
    return [c() for c in checks]
