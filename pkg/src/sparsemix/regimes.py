"""Detection boundary, regime classification and theoretical rate functions.

With eps_n = n^-beta the (beta, r) plane splits into an undetectable part and
three detectable parts with different error-decay behaviour:

* weak signals (dense or moderately sparse): log P_err ~ -g/8 with
  g = n eps^2 (e^{mu^2} - 1), for both error kinds;
* moderate signals: log P_err <= -g/16 with
  g = n eps^2 e^{mu^2} Phi((beta/(2r) - 3/2) mu);
* strong signals: log P_MD ~ -n eps, and log P_FA <= -n eps when
  n eps / mu^2 grows (otherwise log P_FA <= -mu^2 / 8).

All regions are open sets; parameters on an edge are tagged ``ON_BOUNDARY``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import DensePower, GaussianModel, ModelParams, SparseR
from .special import std_normal_logcdf, std_normal_sf

__all__ = [
    "Regime",
    "RateFn",
    "Bound",
    "RateConstant",
    "RegimeClass",
    "Scaling",
    "BoundaryPoint",
    "boundary_point",
    "critical_r",
    "classify",
    "classify_params",
    "rate_g",
    "log_rate_g",
    "check_weak_conditions",
    "WeakConditionReport",
    "universal_md_bound",
    "DEFAULT_GAMMAS",
]

DEFAULT_GAMMAS = (0.3, 0.1, 0.03, 0.01)
# relative tolerance for "on an edge" comparisons
_EDGE_TOL = 1e-12


class Regime(enum.Enum):
    UNDETECTABLE = "undetectable"
    DENSE_WEAK = "dense_weak"
    MODERATELY_SPARSE_WEAK = "moderately_sparse_weak"
    MODERATE = "moderate"
    STRONG = "strong"
    ON_BOUNDARY = "on_boundary"

    @property
    def detectable(self) -> bool:
        return self not in (Regime.UNDETECTABLE, Regime.ON_BOUNDARY)


class RateFn(enum.Enum):
    N_EPS2_D2 = "n_eps2_d2"  # n eps^2 (e^{mu^2} - 1)
    N_EPS = "n_eps"  # n eps
    MU_SQ = "mu_sq"  # mu^2
    MODERATE_G = "moderate_g"  # n eps^2 e^{mu^2} Phi((beta/2r - 3/2) mu)
    NONE = "none"


class Bound(enum.Enum):
    EXACT = "exact"  # lim log P / g = constant
    UPPER = "upper"  # limsup log P / g <= constant
    INDETERMINATE = "indeterminate"


class Scaling(enum.Enum):
    SPARSE_R = "sparse_r"
    DENSE_POWER = "dense_power"


@dataclass(frozen=True)
class RateConstant:
    value: float
    bound: Bound

    @classmethod
    def exact(cls, v: float) -> "RateConstant":
        return cls(v, Bound.EXACT)

    @classmethod
    def upper(cls, v: float) -> "RateConstant":
        return cls(v, Bound.UPPER)

    @classmethod
    def unknown(cls) -> "RateConstant":
        return cls(math.nan, Bound.INDETERMINATE)


@dataclass(frozen=True)
class RegimeClass:
    """Which result governs a parameter point, with its rate function(s).

    ``rate_fn`` normalises the miss-detection exponent; ``rate_fn_fa`` is the
    false-alarm one and only differs in the strong regime when n eps / mu^2
    does not grow.
    """

    regime: Regime
    rate_fn: RateFn
    constant_fa: RateConstant | None
    constant_md: RateConstant | None
    beta: float
    r: float | None = None
    scaling: Scaling | None = None
    rate_fn_fa: RateFn | None = None
    note: str = ""

    def rate_fn_for(self, error: str) -> RateFn:
        if error == "fa" and self.rate_fn_fa is not None:
            return self.rate_fn_fa
        if error not in ("fa", "md"):
            raise ValueError("error must be 'fa' or 'md'")
        return self.rate_fn

    def constant_for(self, error: str) -> RateConstant | None:
        return self.constant_fa if error == "fa" else self.constant_md


# -- boundary --------------------------------------------------------------


def critical_r(beta: float) -> float:
    """Critical sqrt-log signal index: mu_crit = sqrt(2 r_crit log n) for sparse beta."""
    if not (0.5 < beta < 1.0):
        raise ValueError(f"critical_r needs beta in (1/2, 1), got {beta}")
    if beta < 0.75:
        return beta - 0.5
    return (1.0 - math.sqrt(1.0 - beta)) ** 2


@dataclass(frozen=True)
class BoundaryPoint:
    beta: float
    kind: str  # "dense_power" (mu_crit = n^{beta - 1/2}) or "sqrt_log"
    r_crit: float

    def mu_crit(self, n: int) -> float:
        if self.kind == "dense_power":
            return math.exp(self.r_crit * math.log(n))
        return math.sqrt(2.0 * self.r_crit * math.log(n))


def boundary_point(beta: float) -> BoundaryPoint:
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if beta <= 0.5:
        return BoundaryPoint(beta, "dense_power", beta - 0.5)
    return BoundaryPoint(beta, "sqrt_log", critical_r(beta))


# -- classification --------------------------------------------------------

_WEAK = (RateConstant.exact(-1 / 8), RateConstant.exact(-1 / 8))
_MODERATE = (RateConstant.upper(-1 / 16), RateConstant.upper(-1 / 16))


def _strong(beta, r, scaling, fa_growth: str) -> RegimeClass:
    # fa_growth: sign of the log-order of n eps / mu^2 ("grows", "vanishes", "flat")
    md = RateConstant.exact(-1.0)
    if fa_growth == "grows":
        return RegimeClass(Regime.STRONG, RateFn.N_EPS, RateConstant.upper(-1.0), md,
                           beta, r, scaling)
    if fa_growth == "vanishes":
        return RegimeClass(Regime.STRONG, RateFn.N_EPS, RateConstant.upper(-1 / 8), md,
                           beta, r, scaling, rate_fn_fa=RateFn.MU_SQ)
    return RegimeClass(Regime.STRONG, RateFn.N_EPS, RateConstant.unknown(), md,
                       beta, r, scaling, note="n eps / mu^2 neither grows nor vanishes")


def _tag(regime, beta, r, scaling, rate_fn=RateFn.NONE, consts=(None, None), note=""):
    return RegimeClass(regime, rate_fn, consts[0], consts[1], beta, r, scaling, note=note)


def _side(a: float, b: float) -> int:
    """Sign of a - b, with values a few ulps apart counted as equal.

    Edges such as r = beta - 1/2 are computed in floating point, so
    (0.6, 0.1) must land on the boundary even though 0.6 - 0.5 != 0.1.
    """
    if math.isclose(a, b, rel_tol=_EDGE_TOL, abs_tol=_EDGE_TOL):
        return 0
    return 1 if a > b else -1


def _classify_sparse_r(beta: float, r: float) -> RegimeClass:
    sc = Scaling.SPARSE_R
    half = _side(beta, 0.5)
    if half > 0:
        side = _side(r, critical_r(beta))
        if side < 0:
            return _tag(Regime.UNDETECTABLE, beta, r, sc)
        if side == 0:
            return _tag(Regime.ON_BOUNDARY, beta, r, sc, note="detection boundary")
    side = _side(r, beta)
    if side > 0:
        # n eps = n^{1-beta} always outgrows mu^2 = 2 r log n
        return _strong(beta, r, sc, "grows")
    if side == 0:
        return _tag(Regime.ON_BOUNDARY, beta, r, sc, note="moderate/strong edge")
    if _side(beta, 0.75) >= 0:
        return _tag(Regime.MODERATE, beta, r, sc, RateFn.MODERATE_G, _MODERATE)
    side = _side(r, beta / 3)
    if side > 0:
        return _tag(Regime.MODERATE, beta, r, sc, RateFn.MODERATE_G, _MODERATE)
    if side == 0:
        return _tag(Regime.ON_BOUNDARY, beta, r, sc, note="weak/moderate edge")
    if half > 0:
        return _tag(Regime.MODERATELY_SPARSE_WEAK, beta, r, sc, RateFn.N_EPS2_D2, _WEAK)
    if half < 0:
        # mu_n grows like sqrt(log n) and stays below the sqrt((2/3) beta log n) cap
        return _tag(Regime.DENSE_WEAK, beta, r, sc, RateFn.N_EPS2_D2, _WEAK)
    return _tag(Regime.ON_BOUNDARY, beta, r, sc, note="dense/sparse edge beta = 1/2")


def _fa_growth(beta: float, r: float) -> str:
    # n eps / mu^2 = n^{1 - beta - 2r} for mu_n = n^r
    order = _side(1.0 - beta, 2.0 * r)
    return "grows" if order > 0 else "vanishes" if order < 0 else "flat"


def _classify_dense_power(beta: float, r: float) -> RegimeClass:
    sc = Scaling.DENSE_POWER
    if _side(beta, 0.5) > 0:
        # sparse boundary grows like sqrt(log n): bounded mu fails, any n^r with r > 0 clears it
        if r <= 0:
            return _tag(Regime.UNDETECTABLE, beta, r, sc)
        return _strong(beta, r, sc, _fa_growth(beta, r))
    side = _side(r, beta - 0.5)
    if side < 0:
        return _tag(Regime.UNDETECTABLE, beta, r, sc)
    if side == 0:
        return _tag(Regime.ON_BOUNDARY, beta, r, sc, note="detection boundary")
    if r > 0:
        # mu_n = n^r beats every sqrt(log n) scale
        return _strong(beta, r, sc, _fa_growth(beta, r))
    # crit < r <= 0 forces beta < 1/2: mu_n stays bounded, so the weak-signal cap holds
    return _tag(Regime.DENSE_WEAK, beta, r, sc, RateFn.N_EPS2_D2, _WEAK)


def classify(beta: float, r: float, scaling: Scaling | str = Scaling.SPARSE_R) -> RegimeClass:
    """Regime governing eps_n = n^-beta with mu_n = sqrt(2 r log n) or n^r."""
    scaling = Scaling(scaling)
    if not (0.0 < beta < 1.0) or not math.isfinite(r):
        raise ValueError(f"invalid (beta, r) = ({beta}, {r})")
    if scaling is Scaling.SPARSE_R:
        if not r > 0:
            raise ValueError("sparse_r scaling needs r > 0")
        return _classify_sparse_r(beta, r)
    return _classify_dense_power(beta, r)


def classify_params(params: ModelParams, n_grid: Sequence[int] | None = None) -> RegimeClass:
    """Classify a :class:`ModelParams`.

    Tabulated mu sequences have no closed-form scaling; they are accepted as
    weak-signal points when the weak-signal conditions trend correctly over
    ``n_grid`` and rejected otherwise.
    """
    sig = params.signal
    if isinstance(sig, SparseR):
        return classify(params.beta, sig.r, Scaling.SPARSE_R)
    if isinstance(sig, DensePower):
        return classify(params.beta, sig.r, Scaling.DENSE_POWER)
    if n_grid is None:
        n_grid = [n for n, _ in sig.table]
    report = check_weak_conditions(params, n_grid)
    if not report.all_pass:
        raise ValueError("cannot classify tabulated mu: weak-signal conditions do not trend")
    regime = Regime.DENSE_WEAK if params.beta < 0.5 else Regime.MODERATELY_SPARSE_WEAK
    return RegimeClass(regime, RateFn.N_EPS2_D2, *_WEAK, beta=params.beta,
                       note="tabulated mu; weak conditions checked on the grid")


# -- rate functions --------------------------------------------------------


def log_rate_g(regime: RegimeClass, model: GaussianModel, error: str = "md") -> float:
    """log g(n) for the regime's rate function, evaluated in the log domain."""
    fn = regime.rate_fn_for(error)
    n, eps, mu = model.n, model.eps, model.mu
    if fn is RateFn.NONE:
        raise ValueError(f"regime {regime.regime.value} has no rate function")
    if fn is RateFn.N_EPS:
        return math.log(n) + math.log(eps)
    if fn is RateFn.MU_SQ:
        return 2.0 * math.log(mu)
    if fn is RateFn.N_EPS2_D2:
        return math.log(n) + 2.0 * math.log(eps) + math.log(math.expm1(mu * mu))
    if regime.r is None:
        raise ValueError("moderate rate function needs the signal index r")
    arg = (regime.beta / (2.0 * regime.r) - 1.5) * mu
    return math.log(n) + 2.0 * math.log(eps) + mu * mu + std_normal_logcdf(arg)


def rate_g(regime: RegimeClass, model: GaussianModel, error: str = "md") -> float:
    return math.exp(log_rate_g(regime, model, error))


def universal_md_bound(n: int, eps: float) -> float:
    """-n eps: the floor that log P_MD / (n eps) cannot asymptotically go below."""
    return -n * eps


# -- weak-signal condition check -------------------------------------------


@dataclass
class WeakConditionReport:
    n_grid: list[int]
    gammas: list[float]
    tail_term: np.ndarray  # (len(gammas), len(n_grid))
    eps2_d2: np.ndarray  # (len(n_grid),)
    n_eps2_d2: np.ndarray
    tail_decreasing: dict[float, bool] = field(default_factory=dict)
    eps2_d2_decreasing: bool = False
    n_eps2_d2_increasing: bool = False

    @property
    def all_pass(self) -> bool:
        return (all(self.tail_decreasing.values()) and self.eps2_d2_decreasing
                and self.n_eps2_d2_increasing)


def _tail_condition(eps: float, mu: float, gamma: float) -> float:
    t = math.log1p(gamma / eps) / mu
    q = std_normal_sf
    return q(t - 1.5 * mu) + (q(t - 1.5 * mu) - 2.0 * q(t - 0.5 * mu) + q(t + 0.5 * mu)) / math.expm1(mu * mu)


def check_weak_conditions(params: ModelParams, n_grid: Sequence[int],
                          gamma_grid: Sequence[float] = DEFAULT_GAMMAS) -> WeakConditionReport:
    """Evaluate the three weak-signal conditions on a finite grid.

    (i) the tail term E0[(L-1)^2/D^2 ; L >= 1 + gamma/eps] written with Q,
    (ii) eps^2 (e^{mu^2} - 1) and (iii) n eps^2 (e^{mu^2} - 1).  The report
    flags whether (i) and (ii) trend down and (iii) trends up along the grid
    (see :func:`_trend`); this is a finite-grid check, not a limit.
    """
    ns = [int(n) for n in n_grid]
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 2:
        raise ValueError("n_grid must be strictly increasing with at least two entries >= 2")
    gammas = [float(g) for g in gamma_grid]
    if not gammas or any(not (0.0 < g < 1.0) for g in gammas):
        raise ValueError("gamma values must lie in (0, 1)")
    models = [params.model(n) for n in ns]
    if any(m.mu <= 0 for m in models):
        raise ValueError("weak-signal conditions need mu_n > 0")
    tail = np.array([[_tail_condition(m.eps, m.mu, g) for m in models] for g in gammas])
    e2d2 = np.array([m.eps**2 * math.expm1(m.mu**2) for m in models])
    ne2d2 = np.array([m.n for m in models]) * e2d2
    logn = np.log(ns)
    rep = WeakConditionReport(ns, gammas, tail, e2d2, ne2d2)
    rep.tail_decreasing = {g: _trend(logn, row) < 0 for g, row in zip(gammas, tail)}
    rep.eps2_d2_decreasing = _trend(logn, e2d2) < 0
    rep.n_eps2_d2_increasing = _trend(logn, ne2d2) > 0
    return rep


def _trend(logn: np.ndarray, values: np.ndarray) -> int:
    """+1 / -1 when the values trend up / down along the grid, else 0.

    A trend needs the least-squares slope against log n and the final step
    to agree in sign; early transients (the small-gamma tail term can rise
    before it falls) do not veto it.
    """
    slope = np.polyfit(logn, values, 1)[0]
    last = values[-1] - values[-2]
    if slope < 0 and last < 0:
        return -1
    if slope > 0 and last > 0:
        return 1
    return 0
