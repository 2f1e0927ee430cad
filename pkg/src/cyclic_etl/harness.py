"""Strategy comparison: full communication, decimation, ETSE and ETL."""
from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .agents import DIAG_FIELDS, EtlParams, Receiver, Sender, run_closed_loop
from .errors import ConfigurationError
from .kstats import HypotheticalCdf

STRATEGIES = ("full", "decim", "etse", "etl")


@dataclass(frozen=True)
class StrategyResult:
    strategy: str
    comm_ratio: float
    rmse: float
    max_error: float
    state_updates: int
    small_updates: int
    full_updates: int
    values_sent: int
    samples: int
    runtime: float


def _parse(strategy: str):
    name, _, arg = strategy.partition(":")
    if name in ("decim", "decimate"):
        factor = int(arg) if arg else 2
        if factor < 1:
            raise ConfigurationError("decimation factor must be >= 1")
        return "decim", factor
    if name in ("full", "etse", "etl") and not arg:
        return name, None
    raise ConfigurationError(f"unknown strategy {strategy!r}; use full, decim[:N], etse or etl")


def _rmse(err) -> float:
    return math.sqrt(float(np.mean(np.square(err)))) if len(err) else 0.0


def run_strategy(signal, strategy: str, params: EtlParams | None = None,
                 hypothetical: HypotheticalCdf | None = None, backend: str | None = None):
    """Run one strategy on ``signal``; returns ``(StrategyResult, trace dict)``.

    The trace holds per-sample arrays: ``x``, ``x_hat_receiver`` and, for
    the event-triggered strategies, the sender diagnostics.
    """
    params = params or EtlParams()
    xs = np.ascontiguousarray(signal, dtype=float)
    n = xs.size
    name, factor = _parse(strategy)
    t0 = time.perf_counter()
    counts = {"state": 0, "small": 0, "full": 0, "raw": 0}
    if name == "full":
        x_rx = xs.copy()
        sent = n
        counts["state"] = n
        trace = {}
    elif name == "decim":
        idx = np.arange(n)
        held = idx - idx % factor
        x_rx = xs[held]
        sent = int(np.count_nonzero(idx % factor == 0))
        counts["state"] = sent
        trace = {}
    else:
        if hypothetical is None:
            hypothetical = params.hypothetical() if name == "etl" else _dummy_cdf()
        sender = Sender(params, hypothetical=hypothetical, learning=(name == "etl"), backend=backend)
        loop = run_closed_loop(xs, sender, Receiver(sender.model))
        x_rx = loop.receiver_x_hat
        sent = sender.ledger.values_sent
        counts.update(sender.ledger.counts)
        trace = dict(loop.diagnostics)
        trace["mirrored"] = loop.mirrored
        trace["messages"] = loop.messages
    runtime = time.perf_counter() - t0
    err = np.abs(xs - x_rx)
    result = StrategyResult(
        strategy=strategy, comm_ratio=sent / n if n else 0.0, rmse=_rmse(err),
        max_error=float(err.max()) if n else 0.0, state_updates=counts["state"],
        small_updates=counts["small"], full_updates=counts["full"] + counts["raw"],
        values_sent=int(sent), samples=n, runtime=runtime)
    trace["x"] = xs
    trace["x_hat_receiver"] = x_rx
    return result, trace


def _dummy_cdf():
    # ETSE never consults the learning statistics
    return HypotheticalCdf(np.array([1]))


def compare(signal, params: EtlParams | None = None, decimation: int = 2,
            backend: str | None = None):
    """All four strategies on the same signal, ordered full, decim, etse, etl."""
    params = params or EtlParams()
    hyp = params.hypothetical()
    rows = []
    traces = {}
    for s in ("full", f"decim:{decimation}", "etse", "etl"):
        res, tr = run_strategy(signal, s, params, hypothetical=hyp if s == "etl" else None,
                               backend=backend)
        rows.append(res)
        traces[s] = tr
    return rows, traces


def sweep(signal, grid: dict, base: EtlParams | None = None, backend: str | None = None):
    """ETL over the Cartesian product of parameter lists in ``grid``.

    Stands in for cross-validated tuning; each row carries the swept values.
    """
    base = base or EtlParams()
    keys = sorted(grid)
    rows = []
    cdf_cache = {}
    for combo in itertools.product(*(grid[k] for k in keys)):
        prm = replace(base, **dict(zip(keys, combo)))
        key = (prm.delta, prm.sigma, prm.trials, prm.seed)
        if key not in cdf_cache:
            cdf_cache[key] = prm.hypothetical()
        res, _ = run_strategy(signal, "etl", prm, hypothetical=cdf_cache[key], backend=backend)
        rows.append((dict(zip(keys, combo)), res))
    return rows


RESULT_FIELDS = tuple(StrategyResult.__dataclass_fields__)


def write_results(rows, path, extra_fields=()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(extra_fields) + list(RESULT_FIELDS))
        for row in rows:
            if isinstance(row, tuple):
                extra, res = row
                prefix = [extra[f] for f in extra_fields]
            else:
                res, prefix = row, []
            w.writerow(prefix + [asdict(res)[f] for f in RESULT_FIELDS])


def write_trace(trace: dict, path) -> None:
    """Per-sample trace: sender diagnostics plus the receiver's estimate."""
    cols = [c for c in DIAG_FIELDS if c in trace] + ["x_hat_receiver"]
    if "k" not in trace:
        trace = dict(trace, k=np.arange(len(trace["x"])))
        cols = ["k", "x", "x_hat_receiver"]
    n = len(trace["x"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        columns = [np.asarray(trace[c]).tolist() for c in cols]
        for i in range(n):
            w.writerow([col[i] for col in columns])
