"""Command line interface.

Subcommands::

    gen-pop      draw a master population and write it as CSV
    draw-sample  draw one sample from a population CSV
    true-mse     Monte Carlo design MSE of the quantile estimator for a config
    run-study    run a simulation study from a JSON config
    select-h     double bootstrap bandwidth selection for one sample
    estimate     quantile, bootstrap MSE and intervals for one sample

Sample CSVs have the header ``y,pi``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .bandwidth import double_bootstrap_select, make_grid
from .bootstrap import Quantile, Reuse
from .designs import SRSWOR, Poisson, RandSysPPS
from .harness.config import ConfigError, MethodSpec, load_config
from .harness.report import emit_report
from .harness.study import (
    build_design,
    build_population,
    cached_true_mse,
    default_workers,
    draw_sample,
    evaluate_method,
    run_study,
)
from .popgen import GENERATORS, MASTER_SIZE, read_csv, take_prefix, write_csv
from .quantiles import WeightedSample, design_quantile


def _parse_param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, float(value)


def read_sample(path) -> WeightedSample:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"y", "pi"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected a header with columns y,pi")
        rows = list(reader)
    return WeightedSample([float(r["y"]) for r in rows], [float(r["pi"]) for r in rows])


def write_sample(sample: WeightedSample, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "pi"])
        for y, pi in zip(sample.y, sample.pi):
            writer.writerow([repr(float(y)), repr(float(pi))])


def sample_design(name: str, sample: WeightedSample, N):
    """Design object for resampling a single sample.

    Resampling only needs the population size for SRSWOR and the sample size
    for PPS; Poisson resampling uses the sample's own probabilities.
    """
    if name == "srswor":
        if N is None:
            raise ValueError("--N is required for the srswor design")
        return SRSWOR(sample.n, N)
    if name == "poisson":
        return Poisson(sample.pi)
    if name == "pps":
        return RandSysPPS(np.ones(sample.n), sample.n)
    raise ValueError(f"unknown design {name!r}")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_gen_pop(args) -> int:
    params = dict(args.param or [])
    pop = GENERATORS[args.generator](args.size, **params, rng=args.seed)
    write_csv(pop, args.out)
    print(f"wrote {pop.N} units to {args.out}")
    return 0


def cmd_draw_sample(args) -> int:
    pop = read_csv(args.population)
    if args.N is not None:
        pop = take_prefix(pop, args.N)
    design = build_design(args.design, pop, args.n)
    sample, _ = draw_sample(pop, design, np.random.default_rng(args.seed))
    write_sample(sample, args.out)
    print(f"wrote {sample.n} sampled units to {args.out}")
    return 0


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_true_mse(args) -> int:
    cfg = _load(args)
    if args.S is not None:
        cfg = replace(cfg, S_mse=args.S)
    pop = build_population(cfg)
    design = build_design(cfg.design, pop, cfg.n)
    mse = cached_true_mse(pop, design, cfg, args.out)
    _emit({"N": pop.N, "design": cfg.design, "p": cfg.p, "S": cfg.S_mse, "mse": mse})
    return 0


def cmd_run_study(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.output
    if out is None:
        raise ValueError("no output directory: pass --out or set 'output' in the config")
    cfg = replace(cfg, output=str(out))
    workers = args.workers if args.workers is not None else default_workers()
    report = run_study(cfg, workers=workers, cache_dir=Path(out))
    emit_report(report, out, formats=args.format)
    print(f"N={report.N} xi={report.xi:.6g} true MSE={report.mse_true:.6g}")
    print(f"{'method':<22}{'Bias%':>9}{'RRMSE%':>9}{'L% (n)':>8}{'U% (n)':>8}{'L% (b)':>8}{'U% (b)':>8}")
    for m in report.methods:
        nl, nu, _ = m.coverage["normal"]
        bl, bu, _ = m.coverage["basic"]
        print(f"{m.label:<22}{m.bias_pct:9.1f}{m.rrmse_pct:9.1f}{nl:8.1f}{nu:8.1f}{bl:8.1f}{bu:8.1f}")
    print(f"reports written to {out}")
    return 0


def cmd_select_h(args) -> int:
    sample = read_sample(args.sample)
    design = sample_design(args.design, sample, args.N)
    grid = make_grid(args.grid[0], args.grid[1], int(args.grid[2]), sample.n)
    reuse = Reuse(not args.no_reuse, not args.no_reuse)
    res = double_bootstrap_select(sample, design, Quantile(args.p), grid, B=args.B, D=args.D, rng=args.seed, reuse=reuse)
    _emit({
        "h_hat": res.h_hat,
        "constant": res.constant,
        "mse_at_h_hat": res.mse_at_h_hat,
        "risk_curve": [
            {"constant": float(c), "h": float(h), "risk": float(r), "v_star": float(v)}
            for c, h, r, v in zip(grid.constants, grid.bandwidths, res.risk_curve, res.mse_curve)
        ],
    })
    return 0


def cmd_estimate(args) -> int:
    sample = read_sample(args.sample)
    design = sample_design(args.design, sample, args.N)
    item = {"type": args.method}
    if args.method == "FIXED":
        if (args.h is None) == (args.C is None):
            raise ValueError("FIXED needs exactly one of --h or --C")
        item["h" if args.h is not None else "C"] = args.h if args.h is not None else args.C
    if args.method == "BOOT":
        item.update(grid={"c_lo": args.grid[0], "c_hi": args.grid[1], "m": int(args.grid[2])}, D=args.D)
    method = MethodSpec.parse(item)
    root = rngmod.root_seed(args.seed)
    out = evaluate_method(method, sample, design, args.p, sample.n, args.B, args.alpha, root)
    _emit({
        "method": method.label,
        "p": args.p,
        "theta_hat": design_quantile(sample, args.p),
        "mse": out.v_hat,
        "h": out.h,
        "constant": out.constant,
        "normal_ci": list(out.intervals["normal"]),
        "basic_ci": list(out.intervals["basic"]),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothppb", description="Smoothed pseudo-population bootstrap for quantiles")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-pop", help="draw a master population and write it as CSV")
    g.add_argument("--generator", choices=sorted(GENERATORS), required=True)
    g.add_argument("--size", type=int, default=MASTER_SIZE)
    g.add_argument("--param", type=_parse_param, action="append", help="generator parameter key=value")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_pop)

    d = sub.add_parser("draw-sample", help="draw one sample from a population CSV")
    d.add_argument("population")
    d.add_argument("--design", choices=["srswor", "poisson", "pps"], default="srswor")
    d.add_argument("--n", type=int, required=True, help="(expected) sample size")
    d.add_argument("--N", type=int, help="use only the first N population units")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_draw_sample)

    t = sub.add_parser("true-mse", help="Monte Carlo design MSE for a study config")
    t.add_argument("config")
    t.add_argument("--S", type=int, help="number of samples (overrides S_mse)")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="directory holding the true-MSE cache")
    t.set_defaults(func=cmd_true_mse)

    r = sub.add_parser("run-study", help="run a simulation study from a JSON config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, help="root seed (overrides the config)")
    r.add_argument("--workers", type=int, help="worker processes (default from SMOOTHPPB_WORKERS or 1)")
    r.add_argument("--format", nargs="+", choices=["csv", "json"], default=["csv"])
    r.set_defaults(func=cmd_run_study)

    for name, func, text in (("select-h", cmd_select_h, "double bootstrap bandwidth selection for one sample"),
                             ("estimate", cmd_estimate, "quantile, bootstrap MSE and intervals for one sample")):
        s = sub.add_parser(name, help=text)
        s.add_argument("sample", help="sample CSV with columns y,pi")
        s.add_argument("--design", choices=["srswor", "poisson", "pps"], default="srswor")
        s.add_argument("--N", type=int, help="population size (srswor)")
        s.add_argument("--p", type=float, default=0.5)
        s.add_argument("--B", type=int, default=1000)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--grid", type=float, nargs=3, metavar=("C_LO", "C_HI", "M"))
        s.add_argument("--D", type=int, default=50)
        s.set_defaults(func=func)
        if name == "select-h":
            s.add_argument("--no-reuse", action="store_true", help="draw fresh noise and indices per bandwidth")
        else:
            s.add_argument("--method", choices=["UNSMTHD", "FIXED", "PLUG-IN", "BOOT"], default="UNSMTHD")
            s.add_argument("--h", type=float)
            s.add_argument("--C", type=float)
            s.add_argument("--alpha", type=float, default=0.05)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "grid", "") is None and (args.command == "select-h" or getattr(args, "method", None) == "BOOT"):
        parser.error("--grid C_LO C_HI M is required")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"smoothppb: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
