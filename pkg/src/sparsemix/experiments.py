"""Experiment configs and the runners behind the command-line interface.

A config is a flat JSON object.  Runners return plain row dictionaries and
the writers turn them into CSV/JSON with ``repr`` float formatting, so the
same config and seed always give byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .detectors import HcConfig, max_test_error_probs, make_detector
from .estimation import (CalibrationMethod, ErrorEstimate, ErrorKind, calibrate_threshold,
                         estimate_direct, estimate_importance, stream_key)
from .models import DensePower, Explicit, Hypothesis, ModelParams, SparseR, StreamPurpose
from .rates import (compare_to_theory, default_n_min, fit_rate, rate_points)
from .regimes import Scaling, classify, classify_params, log_rate_g

__all__ = [
    "ConfigError",
    "UndetectableRegimeError",
    "ExperimentConfig",
    "load_config",
    "run_rate_experiment",
    "run_adaptive_comparison",
    "run_calibration",
    "emit_regime_map",
    "regime_map_grid",
    "write_csv",
    "write_json",
    "RESULT_COLUMNS",
]

RESULT_COLUMNS = ("n", "g", "p_fa", "se_fa", "method_fa", "p_md", "se_md", "method_md")
ADAPTIVE_COLUMNS = ("n", "test", "level", "threshold", "threshold_method", "achieved_fa",
                    "p_md", "se_md", "method_md", "upper_bound", "calibration_stream",
                    "evaluation_stream")
CALIBRATION_COLUMNS = ("n", "test", "level", "threshold", "threshold_method", "null_sims",
                       "achieved_fa", "degenerate", "fresh_fa", "se_fresh_fa")
REGIME_COLUMNS = ("beta", "r", "regime", "rate_fn", "rate_fn_fa", "constant_fa", "bound_fa",
                  "constant_md", "bound_md")

TESTS = ("lrt", "max", "hc", "acw")
_MIN_TRIALS = 100


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class UndetectableRegimeError(ValueError):
    """Parameters lie on or below the detection boundary."""


@dataclass(frozen=True)
class ExperimentConfig:
    beta: float
    signal: str
    n_grid: tuple[int, ...]
    r: float | None = None
    mu_table: tuple[tuple[int, float], ...] | None = None
    tests: tuple[str, ...] = ("lrt",)
    fa_levels: tuple[float, ...] | str = "oracle"
    trials_direct: int = 10_000
    trials_is: int = 10_000
    is_threshold_n: int = 100_000
    seed: int = 0
    output: str = "results"
    null_sims: int | None = None
    fit_n_min: int | None = None
    slope_tol: float = 0.05
    hc_lo_fraction: float = 0.0
    hc_hi_fraction: float = 1.0
    map_points: int = 100

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ConfigError("beta must lie in (0, 1)")
        if self.signal not in ("sparse_r", "dense_power", "explicit"):
            raise ConfigError(f"signal must be sparse_r, dense_power or explicit, got {self.signal!r}")
        if self.signal == "explicit":
            if not self.mu_table:
                raise ConfigError("explicit signal needs mu_table")
        elif self.r is None:
            raise ConfigError(f"{self.signal} signal needs r")
        ns = self.n_grid
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ConfigError("n_grid must be a nonempty strictly increasing list of positive integers")
        if not self.tests:
            raise ConfigError("tests must not be empty")
        bad = [t for t in self.tests if t not in TESTS]
        if bad:
            raise ConfigError(f"unknown tests {bad}; choose from {list(TESTS)}")
        if self.fa_levels != "oracle":
            if not self.fa_levels or any(not (0.0 < a < 1.0) for a in self.fa_levels):
                raise ConfigError('fa_levels must be "oracle" or a nonempty list in (0, 1)')
        if self.trials_direct < _MIN_TRIALS or self.trials_is < _MIN_TRIALS:
            raise ConfigError(f"trial counts must be >= {_MIN_TRIALS}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.slope_tol < 0:
            raise ConfigError("slope_tol must be >= 0")
        try:
            HcConfig(self.hc_lo_fraction, self.hc_hi_fraction)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        missing = sorted(k for k in ("beta", "signal", "n_grid") if k not in data)
        if missing:
            raise ConfigError(f"missing config keys: {missing}")
        d = dict(data)
        try:
            d["n_grid"] = tuple(_as_int(n) for n in d["n_grid"])
            if "tests" in d:
                d["tests"] = tuple(str(t).lower() for t in d["tests"])
            if isinstance(d.get("fa_levels"), list):
                d["fa_levels"] = tuple(float(a) for a in d["fa_levels"])
            if d.get("mu_table") is not None:
                d["mu_table"] = tuple((_as_int(n), float(m)) for n, m in d["mu_table"])
            for k in ("trials_direct", "trials_is", "is_threshold_n", "seed", "null_sims",
                      "fit_n_min", "map_points"):
                if d.get(k) is not None:
                    d[k] = _as_int(d[k])
            for k in ("beta", "r", "slope_tol", "hc_lo_fraction", "hc_hi_fraction"):
                if d.get(k) is not None:
                    d[k] = float(d[k])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from None
        return cls(**d)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def params(self) -> ModelParams:
        if self.signal == "sparse_r":
            sig = SparseR(self.r)
        elif self.signal == "dense_power":
            sig = DensePower(self.r)
        else:
            sig = Explicit(self.mu_table)
        return ModelParams(self.beta, sig)

    @property
    def hc_config(self) -> HcConfig:
        return HcConfig(self.hc_lo_fraction, self.hc_hi_fraction)


def _as_int(v) -> int:
    if isinstance(v, bool):
        raise TypeError("boolean where an integer was expected")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"{v} is not an integer")
        return int(v)
    return int(v)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)


def _stream_id(purpose: StreamPurpose, n: int, kind: ErrorKind) -> str:
    return ":".join(str(k) for k in stream_key(purpose, n, kind))


def _classified(config: ExperimentConfig):
    regime = classify_params(config.params, config.n_grid)
    if not regime.regime.detectable:
        raise UndetectableRegimeError(
            f"(beta={config.beta}, signal={config.signal}, r={config.r}) is "
            f"{regime.regime.value}: at or below the detection boundary the summed error "
            f"probabilities of every test tend to 1, so there is no rate to fit")
    return regime


# -- rate experiment -------------------------------------------------------


def _estimate_pair(detector, model, use_is: bool, config: ExperimentConfig, threads: int):
    if use_is:
        fa = estimate_importance(detector, model, ErrorKind.FA, config.trials_is, config.seed,
                                 threads=threads)
        md = estimate_importance(detector, model, ErrorKind.MD, config.trials_is, config.seed,
                                 threads=threads)
    else:
        fa = estimate_direct(detector, model, Hypothesis.NULL, config.trials_direct, config.seed,
                             threads=threads)
        md = estimate_direct(detector, model, Hypothesis.ALTERNATIVE, config.trials_direct,
                             config.seed, threads=threads)
    return fa, md


def _agree(a: ErrorEstimate, b: ErrorEstimate, k: float = 4.0) -> bool:
    # a zero count carries the one-event resolution floor as its error
    def se(e):
        return e.std_err if e.p_hat > 0 else 1.0 / e.trials
    return abs(a.p_hat - b.p_hat) <= k * math.hypot(se(a), se(b))


def run_rate_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """Oracle-LRT error probabilities over ``n_grid`` plus slope fits.

    Direct Monte Carlo is used for n <= is_threshold_n and importance
    sampling above.  When ``is_threshold_n`` is itself on the grid both
    estimators run there and must agree within 4 combined standard errors.
    """
    regime = _classified(config)
    params = config.params
    models, fa_est, md_est, rows = [], [], [], []
    overlap = None
    for n in config.n_grid:
        model = params.model(n)
        detector = make_detector("lrt", model)
        fa, md = _estimate_pair(detector, model, n > config.is_threshold_n, config, threads)
        if n == config.is_threshold_n:
            fa_is, md_is = _estimate_pair(detector, model, True, config, threads)
            overlap = {
                "n": n,
                "fa": [fa.p_hat, fa_is.p_hat],
                "md": [md.p_hat, md_is.p_hat],
                "passed": _agree(fa, fa_is) and _agree(md, md_is),
            }
        models.append(model)
        fa_est.append(fa)
        md_est.append(md)
        rows.append({
            "n": n, "g": math.exp(log_rate_g(regime, model, "md")),
            "p_fa": fa.p_hat, "se_fa": fa.std_err, "method_fa": fa.method.value,
            "p_md": md.p_hat, "se_md": md.std_err, "method_md": md.method.value,
        })
    if all(e.p_hat == 0 for e in fa_est + md_est):
        raise ValueError("every error estimate is zero; nothing to fit (use importance sampling)")
    n_min = config.fit_n_min if config.fit_n_min is not None else default_n_min(regime, max(config.n_grid))
    fits, exclusions = [], []
    for kind, ests in ((ErrorKind.FA, fa_est), (ErrorKind.MD, md_est)):
        fn = regime.rate_fn_for(kind.value)
        entry: dict[str, Any] = {"error": kind.value, "rate_fn": fn.value, "regime": regime.regime.value}
        const = regime.constant_for(kind.value)
        entry["constant"] = None if const is None or math.isnan(const.value) else const.value
        entry["bound"] = None if const is None else const.bound.value
        points, excluded = rate_points(models, ests, regime, kind)
        exclusions += [{"n": x.n, "error": kind.value, "reason": x.reason} for x in excluded]
        try:
            fit = fit_rate(points, n_min, error_kind=kind, rate_fn=fn)
        except ValueError as exc:
            entry.update(verdict="FAIL", reason=str(exc), n_min=n_min)
            fits.append(entry)
            continue
        report = compare_to_theory(fit, regime, config.slope_tol)
        entry.update(
            slope=fit.slope, intercept=fit.intercept, r2=fit.r_squared, slope_stderr=fit.slope_stderr,
            n_min=fit.n_min_used, points=fit.points,
            verdict="PASS" if report.passed else "FAIL",
            checks=[{"name": c.name, "rule": c.rule, "constant": c.constant if not math.isnan(c.constant) else None,
                     "tol": c.tol, "verdict": c.verdict.value} for c in report.checks],
        )
        fits.append(entry)
    summary = {
        "beta": config.beta, "signal": config.signal, "r": config.r, "seed": config.seed,
        "regime": regime.regime.value, "fits": fits, "exclusions": exclusions, "overlap": overlap,
    }
    summary["passed"] = all(f["verdict"] == "PASS" for f in fits) and (overlap is None or overlap["passed"])
    return {"rows": rows, "summary": summary}


# -- adaptive tests --------------------------------------------------------


def _null_sims(config: ExperimentConfig, level: float) -> int:
    need = math.ceil(10.0 / level - 1e-9)
    return max(need, config.null_sims if config.null_sims is not None else config.trials_direct)


def run_adaptive_comparison(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    """Miss-detection probability of each test calibrated to each false-alarm level.

    Thresholds come from null simulation on the calibration streams (the max
    test inverts its closed form instead); P_MD is then estimated on the
    disjoint evaluation streams.  Max-test P_MD is the closed form.  The LRT
    switches to importance sampling above ``is_threshold_n``.  A zero count
    is reported as the upper bound 1/trials.
    """
    if config.fa_levels == "oracle":
        raise ConfigError("adaptive comparison needs numeric fa_levels")
    params = config.params
    rows = []
    for n in config.n_grid:
        model = params.model(n)
        for test in config.tests:
            for level in config.fa_levels:
                row = {"n": n, "test": test, "level": level}
                if test == "max":
                    cal = calibrate_threshold("max", model, level, None, config.seed,
                                              method=CalibrationMethod.ANALYTIC_MAX)
                    _, p_md = max_test_error_probs(n, model.eps, model.mu, cal.threshold)
                    row.update(threshold=cal.threshold, threshold_method=cal.method.value,
                               achieved_fa=level, p_md=p_md, se_md=0.0, method_md="analytic",
                               upper_bound=False, calibration_stream="", evaluation_stream="")
                    rows.append(row)
                    continue
                cal = calibrate_threshold(test, model, level, _null_sims(config, level), config.seed,
                                          hc_config=config.hc_config, threads=threads)
                detector = make_detector(test, model, cal.threshold, config.hc_config)
                use_is = test == "lrt" and n > config.is_threshold_n
                if use_is:
                    est = estimate_importance(detector, model, ErrorKind.MD, config.trials_is,
                                              config.seed, threads=threads)
                else:
                    est = estimate_direct(detector, model, Hypothesis.ALTERNATIVE, config.trials_direct,
                                          config.seed, threads=threads)
                cal_id = _stream_id(StreamPurpose.CALIBRATION, n, ErrorKind.FA)
                eval_id = ":".join(str(k) for k in est.stream)
                if cal_id.split(":")[0] == eval_id.split(":")[0]:
                    raise AssertionError("calibration and evaluation streams overlap")
                zero = est.p_hat == 0.0
                row.update(threshold=cal.threshold, threshold_method=cal.method.value,
                           achieved_fa=cal.achieved_fa,
                           p_md=1.0 / est.trials if zero else est.p_hat, se_md=est.std_err,
                           method_md=est.method.value, upper_bound=zero,
                           calibration_stream=cal_id, evaluation_stream=eval_id)
                rows.append(row)
    return rows


def run_calibration(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    """Calibrated thresholds plus a false-alarm check on the evaluation streams."""
    if config.fa_levels == "oracle":
        raise ConfigError("calibration needs numeric fa_levels")
    params = config.params
    rows = []
    for n in config.n_grid:
        model = params.model(n)
        for test in config.tests:
            for level in config.fa_levels:
                if test == "max":
                    cal = calibrate_threshold("max", model, level, None, config.seed,
                                              method=CalibrationMethod.ANALYTIC_MAX)
                else:
                    cal = calibrate_threshold(test, model, level, _null_sims(config, level), config.seed,
                                              hc_config=config.hc_config, threads=threads)
                detector = make_detector(test, model, cal.threshold, config.hc_config)
                fresh = estimate_direct(detector, model, Hypothesis.NULL, config.trials_direct,
                                        config.seed, threads=threads)
                rows.append({
                    "n": n, "test": test, "level": level, "threshold": cal.threshold,
                    "threshold_method": cal.method.value, "null_sims": cal.null_sims or "",
                    "achieved_fa": level if cal.achieved_fa is None else cal.achieved_fa,
                    "degenerate": cal.degenerate, "fresh_fa": fresh.p_hat, "se_fresh_fa": fresh.std_err,
                })
    return rows


# -- regime map ------------------------------------------------------------


def regime_map_grid(points: int = 100) -> np.ndarray:
    """Cell midpoints (i + 1/2) / points, which avoid the exact boundary lines."""
    if points < 1:
        raise ValueError("points must be >= 1")
    return (np.arange(points) + 0.5) / points


def emit_regime_map(beta_grid: Sequence[float], r_grid: Sequence[float],
                    scaling: Scaling | str = Scaling.SPARSE_R) -> list[dict]:
    """One classified row per (beta, r) pair, beta varying slowest."""
    rows = []
    for b in beta_grid:
        if not (0.0 < b < 1.0):
            raise ValueError("beta grid must lie in (0, 1)")
        for r in r_grid:
            if not (0.0 < r < 1.0):
                raise ValueError("r grid must lie in (0, 1)")
            rc = classify(float(b), float(r), scaling)

            def const(c):
                if c is None or math.isnan(c.value):
                    return "", "" if c is None else c.bound.value
                return c.value, c.bound.value

            cfa, bfa = const(rc.constant_fa)
            cmd, bmd = const(rc.constant_md)
            rows.append({
                "beta": float(b), "r": float(r), "regime": rc.regime.value,
                "rate_fn": rc.rate_fn.value, "rate_fn_fa": rc.rate_fn_for("fa").value,
                "constant_fa": cfa, "bound_fa": bfa, "constant_md": cmd, "bound_md": bmd,
            })
    return rows


# -- writers ---------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path: str | Path, rows: Sequence[dict], columns: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows, columns), encoding="utf-8")
    return path


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path
