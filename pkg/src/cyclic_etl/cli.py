"""Command line: simulate, ingest, mc-cdf and sweep."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .agents import EtlParams
from .dynamics import (ScenarioConfig, Segment, generate_scenario, ingest_csv, load_scenario,
                       variable_gait_scenario)
from .errors import EtlError
from .harness import compare, sweep, write_results, write_trace
from .kernels import BACKENDS
from .protocol import write_message_trace

log = logging.getLogger("cyclic_etl")

PRESETS = ("variable", "stationary", "speed-change", "style-change")
SWEEPABLE = {"delta": float, "eta": float, "t_min": int, "alpha": float}


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("trigger and learning parameters")
    g.add_argument("--delta", type=float, default=2.0, help="state trigger threshold")
    g.add_argument("--eta", type=float, default=0.05, help="significance level of the KS test")
    g.add_argument("--tmin-samples", type=int, default=18,
                   help="consecutive samples with p < eta before learning")
    g.add_argument("--alpha", type=float, default=5.0, help="fit error above which a full update is sent")
    g.add_argument("--sigma", type=float, default=0.9, help="process noise std for the Monte-Carlo CDF")
    g.add_argument("--trials", type=int, default=1000, help="Monte-Carlo trials")
    g.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo and presets")
    g.add_argument("--degree", type=int, default=18, help="polynomial degree of full updates")
    g.add_argument("--rate-hz", type=float, default=50.0, help="sample rate of presets")
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None, help="kernel backend")


def _params(args) -> EtlParams:
    return EtlParams(delta=args.delta, eta=args.eta, t_min=args.tmin_samples, alpha=args.alpha,
                     sigma=args.sigma, trials=args.trials, degree=args.degree, seed=args.seed)


def _preset(name: str, args) -> ScenarioConfig:
    rate = args.rate_hz
    cyc = round(rate)
    if name == "variable":
        return variable_gait_scenario(args.minutes, seed=args.seed, sample_rate=rate,
                                      noise_sigma=args.sigma)
    if name == "stationary":
        segs = (Segment(int(args.minutes * 60 * rate), cyc),)
    elif name == "speed-change":
        half = int(args.minutes * 30 * rate)
        segs = (Segment(half, cyc), Segment(half, round(cyc * 1.1)))
    else:
        half = int(args.minutes * 30 * rate)
        segs = (Segment(half, cyc), Segment(half, cyc, shape="stiff_knee"))
    return ScenarioConfig(segs, sample_rate=rate, noise_sigma=args.sigma, rng_seed=args.seed)


def _signal(args) -> np.ndarray:
    if getattr(args, "csv", None):
        rows = ingest_csv(args.csv)
        return np.array([x for _, x in rows], dtype=float)
    if getattr(args, "scenario", None):
        cfg = load_scenario(args.scenario)
    else:
        cfg = _preset(args.preset, args)
    return generate_scenario(cfg).x


def _print_rows(rows) -> None:
    cols = ("strategy", "comm_ratio", "rmse", "max_error", "state_updates", "small_updates",
            "full_updates", "runtime")
    print("  ".join(f"{c:>13}" for c in cols))
    for r in rows:
        vals = []
        for c in cols:
            v = getattr(r, c)
            vals.append(f"{v:>13.4f}" if isinstance(v, float) else f"{v!s:>13}")
        print("  ".join(vals))


def _run_compare(args, signal) -> int:
    prm = _params(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, traces = compare(signal, prm, decimation=args.decimation, backend=args.backend)
    write_results(rows, out / "results.csv")
    trace = traces[args.trace_strategy if args.trace_strategy != "decim" else f"decim:{args.decimation}"]
    write_trace(trace, out / "trace.csv")
    if "messages" in traces["etl"]:
        write_message_trace(traces["etl"]["messages"], out / "messages.csv")
    _print_rows(rows)
    log.info("wrote %s and %s", out / "results.csv", out / "trace.csv")
    return 0


def cmd_simulate(args) -> int:
    return _run_compare(args, _signal(args))


def cmd_ingest(args) -> int:
    return _run_compare(args, _signal(args))


def cmd_mc_cdf(args) -> int:
    prm = _params(args)
    cdf = prm.hypothetical()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cdf.to_csv(out)
    if args.pool:
        cdf.pool_to_csv(args.pool)
    print(f"E[tau] = {cdf.expected_tau:.4f} samples ({cdf.size} trials, max tau {cdf.max_tau})")
    return 0


def _parse_grid(items) -> dict:
    grid = {}
    for item in items:
        key, sep, values = item.partition("=")
        key = key.strip().replace("-", "_")
        if key == "tmin_samples":
            key = "t_min"
        if not sep or key not in SWEEPABLE:
            raise EtlError(f"bad grid entry {item!r}; use name=v1,v2 with name in "
                           f"{sorted(SWEEPABLE)}")
        grid[key] = [SWEEPABLE[key](v) for v in values.split(",") if v.strip()]
    if not grid:
        raise EtlError("empty grid; pass at least one --grid name=v1,v2")
    return grid


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.grid)
    rows = sweep(_signal(args), grid, _params(args), backend=args.backend)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    keys = sorted(grid)
    write_results(rows, out, extra_fields=keys)
    print("  ".join(f"{k:>8}" for k in keys) + "  comm_ratio      rmse")
    for extra, res in rows:
        print("  ".join(f"{extra[k]!s:>8}" for k in keys) + f"  {res.comm_ratio:10.4f}  {res.rmse:8.4f}")
    return 0


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--csv", help="measurement CSV with columns k,x")
    p.add_argument("--preset", choices=PRESETS, default="variable",
                   help="built-in scenario when no file is given")
    p.add_argument("--minutes", type=float, default=30.0, help="length of the preset scenario")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclic-etl",
                                     description="Event-triggered estimation and learning simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario through all four strategies")
    p.add_argument("scenario", nargs="?", help="scenario JSON file (default: preset)")
    p.add_argument("--preset", choices=PRESETS, default="variable")
    p.add_argument("--minutes", type=float, default=30.0)
    _add_outputs(p)
    _add_params(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="run a measurement CSV through all four strategies")
    p.add_argument("csv", help="CSV file with columns k,x")
    _add_outputs(p)
    _add_params(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mc-cdf", help="Monte-Carlo CDF of inter-communication times")
    p.add_argument("--out", default="cdf.csv")
    p.add_argument("--pool", help="also write the raw sample pool to this CSV")
    _add_params(p)
    p.set_defaults(func=cmd_mc_cdf)

    p = sub.add_parser("sweep", help="ETL over a parameter grid")
    _add_source(p)
    p.add_argument("--grid", action="append", default=[], metavar="NAME=V1,V2",
                   help=f"swept parameter, one of {sorted(SWEEPABLE)}; repeatable")
    p.add_argument("--out", default="sweep.csv")
    _add_params(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def _add_outputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out-dir", default=".", help="directory for results.csv and trace.csv")
    p.add_argument("--decimation", type=int, default=2, help="decimation factor of the baseline")
    p.add_argument("--trace-strategy", choices=("full", "decim", "etse", "etl"), default="etl",
                   help="strategy whose per-sample trace is written")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (EtlError, ValueError, OSError) as exc:
        print(f"cyclic-etl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
