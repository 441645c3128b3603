"""Compiled-core vs pure-Python kernel timings.

Usage: python benchmarks/bench_kernels.py [--quick]

The pure backend is the import-time fallback (or LATMET_PURE=1); this script
loads both explicitly and times the hot kernels on workloads where both finish.
"""

import argparse
import time

import numpy as np

from latmet import _core_py
from latmet.geometry import LatticeGeometry
from latmet.model import ModelParams

try:
    from latmet import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="3x3 box only")
    args = ap.parse_args()

    boxes = [(3, 3)] if args.quick else [(3, 3), (4, 3)]
    params = ModelParams("1", "9/10", "3/2")
    u, d1, d2, den = params.scaled()

    backends = [("python", _core_py)]
    if _core is not None:
        backends.insert(0, ("cython", _core))

    for w, h in boxes:
        g = LatticeGeometry(w, h)
        n = g.n_sites
        print(f"\n== {w}x{h} box: 3^{n} = {3**n:,} states ==")
        targs = (n, g.powers_of_three(), g.interior_neighbor_table(), d1, d2, u)
        rows = {}
        for name, impl in backends:
            dt, H = timeit(impl.build_energy_table, *targs, repeat=2)
            rows.setdefault("energy_table", {})[name] = dt
            order = np.argsort(H, kind="stable").astype(np.int64)
            rank = np.empty_like(order)
            rank[order] = np.arange(len(order), dtype=np.int64)
            sweep_args = (H, order, rank, n, g.powers_of_three(), g.nn_pairs(),
                          g.boundary_site_indices())
            if name == "cython" or n <= 9:
                dt, _ = timeit(impl.stability_sweep, *sweep_args, repeat=1)
                rows.setdefault("stability_sweep", {})[name] = dt
                dt, _ = timeit(impl.detailed_balance_max_err, H, n,
                               g.powers_of_three(), g.nn_pairs(),
                               g.boundary_site_indices(), den, 2.0, repeat=1)
                rows.setdefault("detailed_balance", {})[name] = dt
            # KMC throughput: fixed event budget from the empty box
            start = np.zeros(n, dtype=np.uint8)
            absorb = np.array([-1], dtype=np.int64)
            empty = np.empty(0, dtype=np.int64)
            events = 300_000 if name == "cython" else 30_000
            rng = np.random.Generator(np.random.Philox(key=1))
            t0 = time.perf_counter()
            impl.kmc_run(n, g.nn_pairs(), g.interior_neighbor_table(),
                         g.boundary_site_indices(), g.powers_of_three(),
                         d1, d2, u, den, 2.0, start, absorb, 0,
                         empty, -1, empty, -1, rng, events)
            dt = time.perf_counter() - t0
            rows.setdefault("kmc_events_per_s", {})[name] = events / dt
        for op, vals in rows.items():
            line = f"  {op:20s}"
            for name in ("cython", "python"):
                if name in vals:
                    v = vals[name]
                    line += f"  {name}: {v:12,.1f}" if "per_s" in op else f"  {name}: {v*1e3:10.1f} ms"
            if "cython" in vals and "python" in vals:
                ratio = (vals["python"] / vals["cython"]) if "per_s" not in op \
                    else (vals["cython"] / vals["python"])
                line += f"   speedup x{ratio:,.0f}"
            print(line)


if __name__ == "__main__":
    main()
