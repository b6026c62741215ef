"""Slope fits of log error probabilities against a rate function g(n).

If log P_err(n) ~ c g(n), the ordinary least-squares slope of log P_err on
g(n) estimates the constant c.  Points are plain (n, g, log p) records so the
fit can be fed from simulations or from synthetic data alike.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .estimation import ErrorEstimate, ErrorKind
from .regimes import Bound, RateFn, Regime, RegimeClass, log_rate_g

__all__ = [
    "RatePoint",
    "Exclusion",
    "RateFit",
    "Verdict",
    "TheoryCheck",
    "TheoryReport",
    "rate_point",
    "rate_points",
    "fit_rate",
    "default_n_min",
    "compare_to_theory",
]

# fraction of the largest n below which points count as transient
_DENSE_N_MIN_FRACTION = 0.35e6 / 2e7
_SPARSE_N_MIN_FRACTION = 1e5 / 2e7


@dataclass(frozen=True)
class RatePoint:
    n: int
    g_value: float
    log_p: float
    log_p_stderr: float

    def __post_init__(self):
        if not (self.log_p <= 0.0 and math.isfinite(self.log_p)):
            raise ValueError(f"log_p must be finite and <= 0, got {self.log_p}")


@dataclass(frozen=True)
class Exclusion:
    n: int
    reason: str


def rate_point(n: int, g_value: float, estimate: ErrorEstimate) -> RatePoint:
    """Log-scale point with delta-method error std_err / p_hat."""
    if estimate.p_hat <= 0.0:
        raise ValueError("zero error estimate has no logarithm")
    return RatePoint(int(n), float(g_value), math.log(estimate.p_hat),
                     estimate.std_err / estimate.p_hat)


def rate_points(models: Sequence, estimates: Sequence[ErrorEstimate], regime: RegimeClass,
                error: ErrorKind | str) -> tuple[list[RatePoint], list[Exclusion]]:
    """Pair models with estimates; zero estimates are excluded with a reason."""
    error = ErrorKind(error)
    if len(models) != len(estimates):
        raise ValueError("models and estimates differ in length")
    points, excluded = [], []
    for model, est in zip(models, estimates):
        if est.p_hat <= 0.0:
            excluded.append(Exclusion(model.n, f"p_hat = 0 after {est.trials} {est.method.value} trials"))
            continue
        g = math.exp(log_rate_g(regime, model, error.value))
        points.append(rate_point(model.n, g, est))
    return points, excluded


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_min_used: int
    points: int
    slope_stderr: float = math.nan
    error_kind: ErrorKind | None = None
    rate_fn: RateFn | None = None


def fit_rate(points: Iterable[RatePoint], n_min: int = 0, *, error_kind: ErrorKind | str | None = None,
             rate_fn: RateFn | None = None) -> RateFit:
    """Unweighted OLS of log_p on g_value over points with n >= n_min."""
    used = sorted((p for p in points if p.n >= n_min), key=lambda p: (p.n, p.g_value))
    if len(used) < 3:
        raise ValueError(f"need at least 3 points with n >= {n_min}, got {len(used)}")
    g = np.array([p.g_value for p in used])
    y = np.array([p.log_p for p in used])
    if np.all(g == g[0]):
        raise ValueError("all g values are equal; slope undefined")
    res = stats.linregress(g, y)
    r2 = min(max(res.rvalue**2, 0.0), 1.0)
    return RateFit(float(res.slope), float(res.intercept), float(r2), int(n_min), len(used),
                   float(res.stderr), ErrorKind(error_kind) if error_kind else None, rate_fn)


def default_n_min(regime: RegimeClass, max_n: int) -> int:
    """Transient cutoff as a fixed fraction of the largest simulated n."""
    frac = _DENSE_N_MIN_FRACTION if regime.regime is Regime.DENSE_WEAK else _SPARSE_N_MIN_FRACTION
    return int(math.floor(frac * max_n))


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass(frozen=True)
class TheoryCheck:
    name: str
    rule: str
    constant: float
    slope: float
    tol: float
    verdict: Verdict


@dataclass
class TheoryReport:
    regime: Regime
    error_kind: ErrorKind
    rate_fn: RateFn
    checks: list[TheoryCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.verdict is not Verdict.FAIL for c in self.checks)

    def check(self, name: str) -> TheoryCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _verdict(ok: bool) -> Verdict:
    return Verdict.PASS if ok else Verdict.FAIL


def compare_to_theory(fit: RateFit, regime: RegimeClass, tol: float,
                      error: ErrorKind | str | None = None) -> TheoryReport:
    """Check a fitted slope against the regime's limit constant.

    Exact constants pass when |slope - c| <= tol, upper bounds when
    slope <= c + tol.  For strong-regime miss detection, normalised by n eps,
    the universal floor check slope >= -1 - tol is added as ``floor``.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    error = error if error is not None else fit.error_kind
    if error is None:
        raise ValueError("error kind not given and not recorded on the fit")
    error = ErrorKind(error)
    fn = regime.rate_fn_for(error.value)
    if fn is RateFn.NONE:
        raise ValueError(f"regime {regime.regime.value} has no rate function")
    if fit.rate_fn is not None and fit.rate_fn is not fn:
        raise ValueError(f"fit uses {fit.rate_fn.value} but the regime predicts {fn.value}")
    report = TheoryReport(regime.regime, error, fn)
    const = regime.constant_for(error.value)
    s = fit.slope
    if const is None or const.bound is Bound.INDETERMINATE:
        report.checks.append(TheoryCheck("constant", "indeterminate", math.nan, s, tol, Verdict.SKIPPED))
    elif const.bound is Bound.EXACT:
        report.checks.append(TheoryCheck("constant", "exact", const.value, s, tol,
                                         _verdict(abs(s - const.value) <= tol)))
    else:
        report.checks.append(TheoryCheck("constant", "upper", const.value, s, tol,
                                         _verdict(s <= const.value + tol)))
    if error is ErrorKind.MD and fn is RateFn.N_EPS:
        report.checks.append(TheoryCheck("floor", "lower", -1.0, s, tol, _verdict(s >= -1.0 - tol)))
    return report
