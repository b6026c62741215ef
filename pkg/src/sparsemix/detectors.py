"""Test statistics for sparse mixture detection and their decision rules.

Every detector rejects the null when its statistic is greater than or equal
to the threshold, matching the oracle rule "LLR >= 0".  Each detector exposes
``statistic`` for one sample vector and ``statistics`` for a (trials, n)
batch; the batch form is what the Monte Carlo estimators call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .models import llr, llr_batch
from .special import std_normal_isf, std_normal_sf

__all__ = [
    "Decision",
    "DetectorResult",
    "HcConfig",
    "Detector",
    "LRTDetector",
    "MaxDetector",
    "HCDetector",
    "ACWDetector",
    "lrt_statistic",
    "max_statistic",
    "max_test_error_probs",
    "max_test_threshold",
    "hc_statistic",
    "hc_from_pvalues",
    "acw_statistic",
    "make_detector",
]


class Decision(enum.Enum):
    REJECT_NULL = "reject"
    ACCEPT_NULL = "accept"


@dataclass(frozen=True)
class DetectorResult:
    statistic: float
    decision: Decision
    threshold_used: float


@dataclass(frozen=True)
class HcConfig:
    """Index range for the HC maximum.

    ``lo_fraction = 0, hi_fraction = 1`` is the full range 1..n.  Narrower
    ranges (for instance ``hi_fraction = 0.5``) are a common variant but not
    the definition used for the reported tables.
    """

    lo_fraction: float = 0.0
    hi_fraction: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.lo_fraction < self.hi_fraction <= 1.0):
            raise ValueError("need 0 <= lo_fraction < hi_fraction <= 1")

    @classmethod
    def full(cls) -> "HcConfig":
        return cls()

    @classmethod
    def restricted(cls, lo_fraction: float, hi_fraction: float) -> "HcConfig":
        return cls(lo_fraction, hi_fraction)

    @property
    def is_full(self) -> bool:
        return self.lo_fraction == 0.0 and self.hi_fraction == 1.0

    def index_range(self, n: int) -> tuple[int, int]:
        """1-based inclusive indices i with lo_fraction n < i <= hi_fraction n."""
        lo = math.floor(self.lo_fraction * n) + 1
        hi = math.floor(self.hi_fraction * n)
        if hi < lo:
            raise ValueError(f"HC index range is empty for n={n}")
        return lo, hi


def _nonempty(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


# -- statistics ------------------------------------------------------------


def lrt_statistic(model, samples) -> float:
    return llr(model, samples)


def max_statistic(samples) -> float:
    return float(np.max(_nonempty(samples)))


def hc_from_pvalues(pvalues, config: HcConfig | None = None) -> float:
    """Higher Criticism of a p-value vector.

    Indices whose sorted p-value is exactly 0 or 1 have a zero denominator
    and are left out of the maximum; if every index is left out the result
    is ``-inf``.
    """
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        raise ValueError("pvalues must be nonempty")
    return float(_hc_rows(p.reshape(1, -1), config or HcConfig())[0])


def _hc_rows(p: np.ndarray, config: HcConfig) -> np.ndarray:
    n = p.shape[-1]
    lo, hi = config.index_range(n)
    ps = np.sort(p, axis=-1)[:, lo - 1:hi]
    i = np.arange(lo, hi + 1, dtype=float)
    denom = np.sqrt(ps * (1.0 - ps))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = math.sqrt(n) * (i / n - ps) / denom
    terms[denom == 0.0] = -np.inf
    return terms.max(axis=-1)


def hc_statistic(samples, config: HcConfig | None = None) -> float:
    """HC* = max_i sqrt(n) (i/n - p_(i)) / sqrt(p_(i) (1 - p_(i))), p_i = Q(X_i)."""
    x = _nonempty(samples)
    return hc_from_pvalues(std_normal_sf(x), config)


def _acw_rows(x: np.ndarray) -> np.ndarray:
    order = np.argsort(-np.abs(x), axis=-1, kind="stable")
    signs = np.sign(np.take_along_axis(x, order, axis=-1))
    k = np.sqrt(np.arange(1, x.shape[-1] + 1, dtype=float))
    return (np.cumsum(signs, axis=-1) / k).max(axis=-1)


def acw_statistic(samples) -> float:
    """max_k (sum of signs of the k largest-|X| samples) / sqrt(k).

    Ties in |X| keep the original sample order; exact zeros contribute 0.
    """
    x = _nonempty(samples)
    return float(_acw_rows(x.reshape(1, -1))[0])


# -- max test analytics ----------------------------------------------------


def max_test_error_probs(n: int, eps: float, mu: float, tau: float) -> tuple[float, float]:
    """Exact (P_FA, P_MD) of the max test with threshold ``tau``.

    P_FA = 1 - Phi(tau)^n and P_MD = ((1 - eps) Phi(tau) + eps Phi(tau - mu))^n,
    both evaluated in the log domain.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= eps <= 1.0):
        raise ValueError("eps must lie in [0, 1]")
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    q0 = std_normal_sf(tau)
    q1 = std_normal_sf(tau - mu)
    log_phi0 = math.log1p(-q0) if q0 < 1.0 else -math.inf
    p_fa = -math.expm1(n * log_phi0)
    # 1 - ((1-eps) Phi(tau) + eps Phi(tau-mu)) = (1-eps) Q(tau) + eps Q(tau-mu)
    miss_step = (1.0 - eps) * q0 + eps * q1
    p_md = math.exp(n * math.log1p(-miss_step)) if miss_step < 1.0 else 0.0
    return p_fa, p_md


def max_test_threshold(n: int, level: float) -> float:
    """Threshold with P_FA exactly ``level``: Phi^{-1}((1 - level)^(1/n)).

    Formed through the upper tail, Q(tau) = 1 - (1 - level)^(1/n), which keeps
    precision when that tail probability is tiny.
    """
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    tail = -math.expm1(math.log1p(-level) / n)
    return std_normal_isf(tail)


# -- detector objects ------------------------------------------------------


class Detector:
    """Base class: a statistic plus a rejection threshold."""

    name = "detector"
    exposes_llr = False

    def __init__(self, threshold: float):
        self.threshold = float(threshold)

    def statistic(self, samples) -> float:
        raise NotImplementedError

    def statistics(self, batch: np.ndarray) -> np.ndarray:
        return np.array([self.statistic(row) for row in batch])

    def rejects(self, stats) -> np.ndarray:
        return np.asarray(stats) >= self.threshold

    def decide(self, samples) -> DetectorResult:
        s = self.statistic(samples)
        d = Decision.REJECT_NULL if s >= self.threshold else Decision.ACCEPT_NULL
        return DetectorResult(s, d, self.threshold)

    def with_threshold(self, threshold: float) -> "Detector":
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.threshold = float(threshold)
        return clone

    def __repr__(self):
        return f"{type(self).__name__}(threshold={self.threshold!r})"


class LRTDetector(Detector):
    """Oracle likelihood ratio test; threshold 0 minimises (P_FA + P_MD) / 2."""

    name = "lrt"
    exposes_llr = True

    def __init__(self, model, threshold: float = 0.0):
        super().__init__(threshold)
        self.model = model

    def statistic(self, samples) -> float:
        return llr(self.model, samples)

    def statistics(self, batch):
        return llr_batch(self.model, batch)


class MaxDetector(Detector):
    name = "max"

    def __init__(self, threshold: float):
        super().__init__(threshold)

    @classmethod
    def default(cls, n: int) -> "MaxDetector":
        """Threshold sqrt(2 log n)."""
        return cls(math.sqrt(2.0 * math.log(n)))

    def statistic(self, samples) -> float:
        return max_statistic(samples)

    def statistics(self, batch):
        return np.max(batch, axis=-1)


class HCDetector(Detector):
    name = "hc"

    def __init__(self, threshold: float, config: HcConfig | None = None):
        super().__init__(threshold)
        self.config = config or HcConfig()

    def statistic(self, samples) -> float:
        return hc_statistic(samples, self.config)

    def statistics(self, batch):
        return _hc_rows(std_normal_sf(np.asarray(batch, dtype=float)), self.config)


class ACWDetector(Detector):
    name = "acw"

    def __init__(self, threshold: float):
        super().__init__(threshold)

    def statistic(self, samples) -> float:
        return acw_statistic(samples)

    def statistics(self, batch):
        return _acw_rows(np.asarray(batch, dtype=float))


def make_detector(kind: str, model, threshold: float | None = None,
                  hc_config: HcConfig | None = None) -> Detector:
    """Build a detector by name (``lrt``, ``max``, ``hc`` or ``acw``).

    Without a threshold the LRT uses 0 and the max test sqrt(2 log n); HC
    and ACW have no canonical threshold and need one (or calibration).
    """
    kind = kind.lower()
    if kind == "lrt":
        return LRTDetector(model, 0.0 if threshold is None else threshold)
    if kind == "max":
        return MaxDetector.default(model.n) if threshold is None else MaxDetector(threshold)
    if threshold is None:
        raise ValueError(f"{kind} detector needs an explicit threshold")
    if kind == "hc":
        return HCDetector(threshold, hc_config)
    if kind == "acw":
        return ACWDetector(threshold)
    raise ValueError(f"unknown detector kind {kind!r}")
