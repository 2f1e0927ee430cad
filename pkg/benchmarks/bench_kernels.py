"""Compare the compiled and pure-Python sender kernels.

Runs the raw scan loop on a stationary cyclic signal with the exact model
(learning never fires, so every sample goes through the kernel), then a
whole ETL sender on a variable scenario. Usage:

    python benchmarks/bench_kernels.py [--samples 200000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cyclic_etl.agents import EtlParams, Sender
from cyclic_etl.dynamics import ScenarioConfig, Segment, generate_scenario, variable_gait_scenario
from cyclic_etl.kernels import BACKENDS


def bench_scan(kernel, xs, traj, table, h, repeat):
    n = xs.size
    best = np.inf
    for _ in range(repeat):
        fstate = np.zeros(2)
        istate = np.array([traj.size, 0, 0, 0, 0], dtype=np.int64)
        counts = np.zeros(table.size, dtype=np.int64)
        outs = (np.empty(n), np.empty(n), np.empty(n), np.empty(n, np.int8), np.empty(n, np.int64))
        t0 = time.perf_counter()
        pos = 0
        while pos < n:
            fired = kernel.scan(xs, pos, n, traj, fstate, istate, counts, table, h,
                                2.0, 0.05, 18, *outs)
            if fired < 0:
                break
            counts[:] = 0
            istate[1:4] = 0
            pos = fired + 1
        best = min(best, time.perf_counter() - t0)
    return best, outs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    prm = EtlParams()
    hyp = prm.hypothetical()
    sc = generate_scenario(ScenarioConfig((Segment(args.samples, 50),), rng_seed=1))
    xs = np.ascontiguousarray(sc.x)
    traj = np.ascontiguousarray(sc.u[:50])
    table = np.ascontiguousarray(hyp.table)

    print(f"scan loop, {args.samples} samples")
    results = {}
    for name, kernel in sorted(BACKENDS.items()):
        t, outs = bench_scan(kernel, xs, traj, table, hyp.size, args.repeat)
        results[name] = outs
        print(f"  {name:7s} {t:8.4f} s  {1e9 * t / args.samples:8.1f} ns/sample")
    if len(results) == 2:
        a, b = results.values()
        same = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(a, b))
        print(f"  outputs identical: {same}")

    var = generate_scenario(variable_gait_scenario(10, seed=0)).x
    print(f"full ETL sender, variable scenario, {var.size} samples")
    for name in sorted(BACKENDS):
        best = np.inf
        for _ in range(args.repeat):
            s = Sender(prm, hypothetical=hyp, backend=name)
            t0 = time.perf_counter()
            s.run(var)
            best = min(best, time.perf_counter() - t0)
        print(f"  {name:7s} {best:8.4f} s")


if __name__ == "__main__":
    main()
