"""Monte Carlo estimation of false-alarm and miss-detection probabilities.

Two estimators are provided:

* direct Monte Carlo: simulate under the hypothesis whose error is wanted
  and count errors;
* importance sampling for likelihood-ratio detectors: simulate under the
  *other* hypothesis and reweight by the exact likelihood ratio,

      P_FA = E_1[ 1{LLR >= t} exp(-LLR) ],   P_MD = E_0[ 1{LLR < t} exp(LLR) ].

Every trial draws from its own counter-based stream keyed by
``(seed, purpose, n, error kind, trial index)``, so an estimate depends only
on its inputs and not on block size or thread count, and two runs over
adjacent trial ranges merge into exactly the run over the union.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detectors import Detector, HcConfig, make_detector, max_test_threshold
from .models import Hypothesis, StreamPurpose, trial_rng

__all__ = [
    "ErrorKind",
    "Method",
    "ErrorEstimate",
    "CalibratedThreshold",
    "CalibrationMethod",
    "DegenerateThresholdWarning",
    "simulate_statistics",
    "estimate_direct",
    "estimate_importance",
    "merge_estimates",
    "calibrate_threshold",
    "stream_key",
]

# rows x n budget for one simulated block
_BLOCK_ELEMENTS = 1 << 20


class ErrorKind(str, enum.Enum):
    FA = "fa"
    MD = "md"

    @property
    def hypothesis(self) -> Hypothesis:
        """Hypothesis under which this error is defined."""
        return Hypothesis.NULL if self is ErrorKind.FA else Hypothesis.ALTERNATIVE

    @classmethod
    def under(cls, hyp: Hypothesis) -> "ErrorKind":
        return cls.FA if Hypothesis(hyp) == Hypothesis.NULL else cls.MD


class Method(str, enum.Enum):
    DIRECT = "direct_mc"
    IMPORTANCE = "importance"


class CalibrationMethod(str, enum.Enum):
    EMPIRICAL = "empirical_quantile"
    ANALYTIC_MAX = "analytic_max"


class DegenerateThresholdWarning(UserWarning):
    """The calibrated threshold sits on tied null statistics."""


@dataclass(frozen=True)
class ErrorEstimate:
    p_hat: float
    std_err: float
    method: Method
    trials: int
    seed: int
    kind: ErrorKind
    stream: tuple[int, ...]
    trial_offset: int = 0
    sum_w: float = 0.0
    sum_w2: float = 0.0

    @property
    def rel_err(self) -> float:
        return self.std_err / self.p_hat if self.p_hat > 0 else math.inf


@dataclass(frozen=True)
class CalibratedThreshold:
    level: float
    threshold: float
    method: CalibrationMethod
    null_sims: int | None = None
    achieved_fa: float | None = None
    degenerate: bool = False
    stream: tuple[int, ...] | None = None


def stream_key(purpose: StreamPurpose, n: int, kind: ErrorKind) -> tuple[int, int, int]:
    """Prefix of the per-trial stream key; the trial index is appended."""
    return int(purpose), int(n), int(kind.hypothesis)


# -- simulation core -------------------------------------------------------


def _block_ranges(start: int, stop: int, n: int, threads: int):
    rows = max(1, _BLOCK_ELEMENTS // max(n, 1))
    if threads > 1:
        rows = max(1, min(rows, math.ceil((stop - start) / (4 * threads))))
    return [(a, min(a + rows, stop)) for a in range(start, stop, rows)]


def simulate_statistics(detector: Detector, model, hyp: Hypothesis, trials: int, seed: int,
                        key: tuple[int, ...], trial_offset: int = 0,
                        threads: int = 1) -> np.ndarray:
    """Statistic values for trials ``trial_offset .. trial_offset + trials - 1``.

    Trial ``t`` samples ``model`` under ``hyp`` from ``trial_rng(seed, *key, t)``.
    The returned array is in trial order whatever the thread count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hyp = Hypothesis(hyp)
    n = model.n

    def run(block):
        a, b = block
        x = np.empty((b - a, n))
        for row, t in enumerate(range(a, b)):
            model.fill(hyp, trial_rng(seed, *key, t), x[row])
        return detector.statistics(x)

    blocks = _block_ranges(trial_offset, trial_offset + trials, n, threads)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts)


def estimate_direct(detector: Detector, model, hyp: Hypothesis, trials: int, seed: int, *,
                    purpose: StreamPurpose = StreamPurpose.EVALUATION,
                    trial_offset: int = 0, threads: int = 1) -> ErrorEstimate:
    """Error frequency of ``detector`` on data simulated under ``hyp``.

    Under the null the error is a rejection (false alarm); under the
    alternative it is an acceptance (missed detection).
    """
    kind = ErrorKind.under(hyp)
    key = stream_key(purpose, model.n, kind)
    stats = simulate_statistics(detector, model, hyp, trials, seed, key, trial_offset, threads)
    rejected = detector.rejects(stats)
    errors = int(np.count_nonzero(rejected if kind is ErrorKind.FA else ~rejected))
    p = errors / trials
    return ErrorEstimate(p, math.sqrt(p * (1.0 - p) / trials), Method.DIRECT, trials, seed,
                         kind, key, trial_offset, float(errors), float(errors))


def _importance_weights(llr_values: np.ndarray, threshold: float, kind: ErrorKind) -> np.ndarray:
    if kind is ErrorKind.FA:
        hit = llr_values >= threshold
        return np.exp(np.where(hit, -llr_values, -np.inf))
    hit = llr_values < threshold
    return np.exp(np.where(hit, llr_values, -np.inf))


def estimate_importance(detector: Detector, model, target: ErrorKind | str, trials: int,
                        seed: int, *, purpose: StreamPurpose = StreamPurpose.EVALUATION,
                        trial_offset: int = 0, threads: int = 1) -> ErrorEstimate:
    """Change-of-measure estimate of one error probability of an LRT-type detector.

    P_FA is estimated from draws under the alternative with weights
    exp(-LLR); P_MD from draws under the null with weights exp(+LLR).  The
    stream key is that of the error kind, so with eps = 0 the draws coincide
    with those of :func:`estimate_direct`.
    """
    if not getattr(detector, "exposes_llr", False):
        raise TypeError(f"{detector!r} does not expose a log-likelihood ratio")
    if trials < 2:
        raise ValueError("importance sampling needs at least two trials")
    kind = ErrorKind(target)
    sampling = Hypothesis.ALTERNATIVE if kind is ErrorKind.FA else Hypothesis.NULL
    key = stream_key(purpose, model.n, kind)
    llr_values = simulate_statistics(detector, model, sampling, trials, seed, key,
                                     trial_offset, threads)
    w = _importance_weights(llr_values, detector.threshold, kind)
    sum_w = math.fsum(w)
    sum_w2 = math.fsum(w * w)
    return ErrorEstimate(sum_w / trials, float(np.std(w, ddof=1)) / math.sqrt(trials),
                         Method.IMPORTANCE, trials, seed, kind, key, trial_offset,
                         sum_w, sum_w2)


def merge_estimates(a: ErrorEstimate, b: ErrorEstimate) -> ErrorEstimate:
    """Combine estimates over adjacent trial ranges of the same stream."""
    if (a.method, a.kind, a.seed, a.stream) != (b.method, b.kind, b.seed, b.stream):
        raise ValueError("estimates come from different streams or estimators")
    if b.trial_offset != a.trial_offset + a.trials:
        a, b = b, a
    if b.trial_offset != a.trial_offset + a.trials:
        raise ValueError("trial ranges are not adjacent")
    t = a.trials + b.trials
    s1, s2 = a.sum_w + b.sum_w, a.sum_w2 + b.sum_w2
    p = s1 / t
    if a.method is Method.DIRECT:
        se = math.sqrt(p * (1.0 - p) / t)
    else:
        var = max(s2 - s1 * s1 / t, 0.0) / (t - 1)
        se = math.sqrt(var / t)
    return ErrorEstimate(p, se, a.method, t, a.seed, a.kind, a.stream, a.trial_offset, s1, s2)


# -- threshold calibration -------------------------------------------------


def calibrate_threshold(statistic_kind: str | Detector, model, level: float, null_sims: int | None,
                        seed: int, *, method: CalibrationMethod | str = CalibrationMethod.EMPIRICAL,
                        hc_config: HcConfig | None = None, threads: int = 1) -> CalibratedThreshold:
    """Threshold giving false-alarm probability ``level``.

    The empirical method simulates the statistic ``null_sims`` times on the
    calibration streams and returns the order statistic with exactly
    ``floor(level * null_sims)`` simulated values at or above it, so the
    achieved exceedance fraction is at most ``level`` under the
    reject-on-equality rule.  For the max test the analytic method inverts
    P_FA = 1 - Phi(tau)^n instead.

    ``statistic_kind`` is a detector name or a :class:`Detector` instance
    whose statistic is to be calibrated.
    """
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    method = CalibrationMethod(method)
    if method is CalibrationMethod.ANALYTIC_MAX:
        if getattr(statistic_kind, "name", statistic_kind) != "max":
            raise ValueError("analytic calibration exists only for the max test")
        return CalibratedThreshold(level, max_test_threshold(model.n, level), method)
    need = math.ceil(10.0 / level - 1e-9)
    if null_sims is None or null_sims < need:
        raise ValueError(f"level {level} needs at least {need} null simulations, got {null_sims}")
    if isinstance(statistic_kind, Detector):
        detector, label = statistic_kind, statistic_kind.name
    else:
        detector = make_detector(statistic_kind, model, threshold=0.0, hc_config=hc_config)
        label = statistic_kind
    key = stream_key(StreamPurpose.CALIBRATION, model.n, ErrorKind.FA)
    stats = np.sort(simulate_statistics(detector, model, Hypothesis.NULL, null_sims, seed, key,
                                        threads=threads))
    above = math.floor(level * null_sims * (1.0 + 1e-12))
    threshold = float(stats[null_sims - above])
    achieved = float(np.count_nonzero(stats >= threshold)) / null_sims
    degenerate = achieved > level or stats[null_sims - above - 1] == threshold
    if degenerate:
        warnings.warn(f"{label} threshold {threshold!r} at level {level} sits on tied "
                      f"null statistics; achieved false-alarm fraction is {achieved}",
                      DegenerateThresholdWarning, stacklevel=2)
    return CalibratedThreshold(level, threshold, method, null_sims, achieved, bool(degenerate), key)
