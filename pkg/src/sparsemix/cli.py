"""Command-line interface: ``sparsemix {rate,adaptive,regime-map,calibrate,selftest}``.

Exit status is 0 when every verdict the command produces passes, 1 when a
verdict fails and 2 for invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex
from .regimes import Scaling
from .selftest import run_selftest


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out_dir(args, cfg=None) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(cfg.output if cfg is not None else ".")


def _cmd_rate(args) -> int:
    cfg = _config(args)
    res = ex.run_rate_experiment(cfg, threads=args.threads)
    out = _out_dir(args, cfg)
    ex.write_csv(out / "results.csv", res["rows"], ex.RESULT_COLUMNS)
    ex.write_json(out / "fits.json", res["summary"])
    for f in res["summary"]["fits"]:
        slope = f.get("slope")
        shown = "n/a" if slope is None else f"{slope:.4f}"
        print(f"{f['error']}: slope {shown} ({f['rate_fn']}) {f['verdict']}")
    ov = res["summary"]["overlap"]
    if ov is not None:
        print(f"direct/IS overlap at n={ov['n']}: {'PASS' if ov['passed'] else 'FAIL'}")
    return 0 if res["summary"]["passed"] else 1


def _cmd_adaptive(args) -> int:
    cfg = _config(args)
    rows = ex.run_adaptive_comparison(cfg, threads=args.threads)
    path = ex.write_csv(_out_dir(args, cfg) / "adaptive.csv", rows, ex.ADAPTIVE_COLUMNS)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _config(args)
    rows = ex.run_calibration(cfg, threads=args.threads)
    path = ex.write_csv(_out_dir(args, cfg) / "calibration.csv", rows, ex.CALIBRATION_COLUMNS)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_regime_map(args) -> int:
    grid = ex.regime_map_grid(args.points)
    rows = ex.emit_regime_map(grid, grid, args.scaling)
    path = ex.write_csv(_out_dir(args) / "regime_map.csv", rows, ex.REGIME_COLUMNS)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_selftest(args) -> int:
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsemix",
                                     description="Sparse mixture detection experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="flat JSON experiment config")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (never changes output)")
        p.add_argument("--out", default=None, help="output directory")

    for name, fn, helptext in (("rate", _cmd_rate, "error probabilities and slope fits"),
                               ("adaptive", _cmd_adaptive, "miss detection at calibrated levels"),
                               ("calibrate", _cmd_calibrate, "thresholds for the given levels")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.set_defaults(func=fn)
    p = sub.add_parser("regime-map", help="classify a (beta, r) grid")
    common(p, needs_config=False)
    p.add_argument("--points", type=int, default=100, help="grid points per axis")
    p.add_argument("--scaling", choices=[s.value for s in Scaling], default=Scaling.SPARSE_R.value)
    p.set_defaults(func=_cmd_regime_map)
    p = sub.add_parser("selftest", help="oracle checks")
    common(p, needs_config=False)
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    if getattr(args, "seed", None) is not None and not (0 <= args.seed < 2**64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ex.ConfigError, ex.UndetectableRegimeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
