"""Sparse mixture models, log-likelihood ratios and trial random streams.

Under the null, X_1..X_n are i.i.d. N(0, 1).  Under the alternative each draw
is N(mu_n, 1) with probability eps_n and N(0, 1) otherwise, with
eps_n = n^(-beta).  Everything downstream works from two model attributes
(``n`` and ``eps``) plus ``log_lr``, the per-sample log likelihood ratio of
the signal density against the null density, so :class:`DiscreteModel` can
stand in for the Gaussian one in exact-enumeration checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Hypothesis",
    "StreamPurpose",
    "SparseR",
    "DensePower",
    "Explicit",
    "ModelParams",
    "GaussianModel",
    "DiscreteModel",
    "log_likelihood_ratio_single",
    "llr_terms",
    "llr",
    "llr_batch",
    "chi2_divergence",
    "sample",
    "trial_rng",
]

# above this value of eps*L the summand is rewritten around log(eps*L)
_LARGE_RATIO = 1e10
_LOG_LARGE_RATIO = math.log(_LARGE_RATIO)


class Hypothesis(enum.IntEnum):
    NULL = 0
    ALTERNATIVE = 1


class StreamPurpose(enum.IntEnum):
    """Top-level split of the random streams; calibration never sees evaluation draws."""

    EVALUATION = 0
    CALIBRATION = 1
    SELFTEST = 2


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one trial.

    The stream is a pure function of ``(seed, *key)``; callers pass
    ``(purpose, n, hypothesis, trial_index)`` so that results never depend on
    how trials are scheduled across workers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# -- parameterisation -------------------------------------------------------


@dataclass(frozen=True)
class SparseR:
    """mu_n = sqrt(2 r log n)."""

    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"SparseR needs r > 0, got {self.r}")

    def mu(self, n: int) -> float:
        return math.sqrt(2.0 * self.r * math.log(n))


@dataclass(frozen=True)
class DensePower:
    """mu_n = n^r (r < 0 is the usual dense choice; r = 0 gives mu_n = 1)."""

    r: float

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ValueError("DensePower exponent must be finite")

    def mu(self, n: int) -> float:
        return math.exp(self.r * math.log(n))


@dataclass(frozen=True)
class Explicit:
    """Tabulated (n, mu_n) pairs."""

    table: tuple[tuple[int, float], ...]

    def __init__(self, pairs):
        table = tuple((int(n), float(m)) for n, m in pairs)
        ns = [n for n, _ in table]
        if len(set(ns)) != len(ns):
            raise ValueError("Explicit mu table has repeated n")
        if any(m < 0 or not math.isfinite(m) for _, m in table):
            raise ValueError("Explicit mu values must be finite and >= 0")
        object.__setattr__(self, "table", tuple(sorted(table)))

    def mu(self, n: int) -> float:
        for k, m in self.table:
            if k == n:
                return m
        raise KeyError(f"no mu tabulated for n={n}")


SignalSpec = Union[SparseR, DensePower, Explicit]


@dataclass(frozen=True)
class ModelParams:
    beta: float
    signal: SignalSpec

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not isinstance(self.signal, (SparseR, DensePower, Explicit)):
            raise TypeError(f"unsupported signal spec {self.signal!r}")

    def eps(self, n: int) -> float:
        # exp(-beta log n) rather than n**-beta: n is an int and may be large
        return math.exp(-self.beta * math.log(n))

    def mu(self, n: int) -> float:
        return self.signal.mu(n)

    def model(self, n: int) -> "GaussianModel":
        if n < 1:
            raise ValueError("n must be >= 1")
        return GaussianModel(n=int(n), eps=self.eps(n), mu=self.mu(n))


# -- models ----------------------------------------------------------------


@dataclass(frozen=True)
class GaussianModel:
    """Gaussian location model at a single sample size."""

    n: int
    eps: float
    mu: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0.0 <= self.eps <= 1.0):
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if not (math.isfinite(self.mu) and self.mu >= 0.0):
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")

    @classmethod
    def from_params(cls, params: ModelParams, n: int) -> "GaussianModel":
        return params.model(n)

    def log_lr(self, x):
        """log L_n(x) = mu x - mu^2 / 2, evaluated without exponentiating."""
        out = np.multiply(self.mu, np.asarray(x, dtype=float))
        out -= 0.5 * self.mu * self.mu
        return out

    @property
    def chi2(self) -> float:
        return math.expm1(self.mu * self.mu)

    def sample(self, hyp: Hypothesis, rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count)
        self.fill(hyp, rng, out)
        return out

    def fill(self, hyp: Hypothesis, rng: np.random.Generator, out: np.ndarray) -> None:
        # normals are drawn before the labels so eps = 0 reproduces the null bitwise
        rng.standard_normal(out=out)
        if hyp == Hypothesis.ALTERNATIVE and self.eps > 0.0 and out.size:
            # i.i.d. Bernoulli(eps) labels, drawn as a Binomial count of
            # uniformly placed signal positions
            k = int(rng.binomial(out.size, self.eps))
            out[rng.choice(out.size, size=k, replace=False)] += self.mu


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Mixture model on a finite grid, used for exact enumeration checks.

    ``pmf0`` and ``pmf1`` are the (renormalised) null and signal masses on
    ``grid``; the alternative draws from ``(1 - eps) pmf0 + eps pmf1``.
    """

    grid: np.ndarray
    pmf0: np.ndarray
    pmf1: np.ndarray
    n: int
    eps: float

    @classmethod
    def discretized_gaussian(cls, n: int, eps: float, mu: float,
                             points: int = 41, lo: float = -5.0, hi: float = 5.0):
        grid = np.linspace(lo, hi, points)
        w0 = np.exp(-0.5 * grid**2)
        w1 = np.exp(-0.5 * (grid - mu) ** 2)
        return cls(grid, w0 / w0.sum(), w1 / w1.sum(), n, eps)

    def __post_init__(self):
        for name in ("grid", "pmf0", "pmf1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.grid.shape == self.pmf0.shape == self.pmf1.shape):
            raise ValueError("grid and pmfs must have the same shape")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.pmf0 <= 0) or np.any(self.pmf1 < 0):
            raise ValueError("pmf0 must be positive and pmf1 non-negative")
        if not (0.0 <= self.eps <= 1.0):
            raise ValueError("eps must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            object.__setattr__(self, "_log_ratio", np.log(self.pmf1) - np.log(self.pmf0))
        object.__setattr__(self, "_cdf0", np.cumsum(self.pmf0) / self.pmf0.sum())
        object.__setattr__(self, "_cdf1", np.cumsum(self.pmf1) / self.pmf1.sum())

    @property
    def pmf_alt(self) -> np.ndarray:
        return (1.0 - self.eps) * self.pmf0 + self.eps * self.pmf1

    def index(self, x) -> np.ndarray:
        idx = np.searchsorted(self.grid, x)
        idx = np.clip(idx, 0, self.grid.size - 1)
        if not np.all(self.grid[idx] == x):
            raise ValueError("sample is not a grid point")
        return idx

    def log_lr(self, x):
        return self._log_ratio[self.index(np.asarray(x, dtype=float))]

    def sample(self, hyp: Hypothesis, rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count)
        self.fill(hyp, rng, out)
        return out

    def fill(self, hyp: Hypothesis, rng: np.random.Generator, out: np.ndarray) -> None:
        u = rng.random(out.size)
        idx = np.searchsorted(self._cdf0, u, side="right")
        if hyp == Hypothesis.ALTERNATIVE and self.eps > 0.0 and out.size:
            labels = rng.random(out.size) < self.eps
            idx[labels] = np.searchsorted(self._cdf1, u[labels], side="right")
        np.minimum(idx, self.grid.size - 1, out=idx)
        out[...] = self.grid[idx]


# -- likelihood ratios -----------------------------------------------------


def _require_finite(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")


def log_likelihood_ratio_single(model: GaussianModel, x: float) -> float:
    """log L_n(x) for one observation."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("observation must be finite")
    return model.mu * x - 0.5 * model.mu * model.mu


def llr_terms(log_lr, eps: float) -> np.ndarray:
    """Per-sample summands log(1 - eps + eps L) given log L.

    Three branches keep every intermediate finite:

    * ``eps (L - 1)`` in [-0.5, 1e10]: ``log1p(eps expm1(log L))``
    * ``eps (L - 1) > 1e10``: ``log eps + log L + log1p((1 - eps) / (eps L))``
    * ``eps (L - 1) < -0.5`` (only possible for eps > 1/2): log-sum-exp form.
    """
    return _llr_terms_inplace(np.array(log_lr, dtype=float), eps)


def _llr_terms_inplace(ell: np.ndarray, eps: float) -> np.ndarray:
    """:func:`llr_terms` that may overwrite ``ell``."""
    if eps == 0.0:
        return np.zeros_like(ell)
    log_eps = math.log(eps)
    if eps <= 0.5 and (ell.size == 0 or ell.max() + log_eps <= _LOG_LARGE_RATIO):
        # common case: one pass each of expm1, scale and log1p
        np.expm1(ell, out=ell)
        ell *= eps
        return np.log1p(ell, out=ell)
    t = ell + log_eps
    big = t > _LOG_LARGE_RATIO
    any_big = bool(big.any())
    ell_mid = np.where(big, 0.0, ell) if any_big else ell
    d = eps * np.expm1(ell_mid)
    if eps <= 0.5:
        out = np.log1p(d)
    else:
        small = d < -0.5
        out = np.log1p(np.maximum(d, -0.5))
        if small.any():
            with np.errstate(divide="ignore"):
                out[small] = np.logaddexp(math.log1p(-eps) if eps < 1.0 else -np.inf, t[small])
    if any_big:
        tb = t[big]
        out[big] = tb + np.log1p((1.0 - eps) * np.exp(-tb))
    return out


def llr(model, samples) -> float:
    """Log-likelihood ratio sum_i log(1 - eps + eps L(X_i)) of the alternative vs the null."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size != model.n:
        raise ValueError(f"expected {model.n} samples, got shape {x.shape}")
    _require_finite(x)
    return float(np.sum(llr_terms(model.log_lr(x), model.eps)))


def llr_batch(model, samples: np.ndarray) -> np.ndarray:
    """Row-wise :func:`llr` for a (trials, n) array; no input validation."""
    return np.sum(_llr_terms_inplace(np.asarray(model.log_lr(samples), dtype=float), model.eps), axis=-1)


def chi2_divergence(model: GaussianModel) -> float:
    """chi^2 divergence D_n^2 = exp(mu^2) - 1 between signal and null densities."""
    return math.expm1(model.mu * model.mu)


def sample(model, hyp: Hypothesis, rng_stream: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. observations under ``hyp``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    return model.sample(Hypothesis(hyp), rng_stream, int(count))


def as_samples(values: Sequence[float]) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    _require_finite(x)
    return x
