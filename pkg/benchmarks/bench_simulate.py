"""Sampling throughput: compiled kernel vs the lockstep numpy path.

Both back ends must return identical arrays; the script checks that before
timing anything.  Usage:

    python benchmarks/bench_simulate.py [--samples 200000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from arrival import _kernels
from arrival.gadgets import gen_double_exp, gen_majsat_rs
from arrival.io import CnfFormula
from arrival.normalize import prune_dead_edges, to_simple_form
from arrival.simulate import instance_tables


def cases():
    yield "double-exp n=3", gen_double_exp(3)
    yield "double-exp n=3, simple form", prune_dead_edges(to_simple_form(gen_double_exp(3)))
    phi = CnfFormula(3, ((1, -2), (2, 3), (-1, -3)))
    yield "majsat gadget n=3 m=3", gen_majsat_rs(phi)[0]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--edges", action="store_true", help="also count edge traversals")
    args = ap.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable (or ARRIVAL_DISABLE_NUMBA set): timing the numpy path only")

    print(f"{'case':32s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s}")
    for name, inst in cases():
        t = instance_tables(inst)
        limit = 1 << 20

        def run_np():
            return _kernels.run_batch(t, 1, 0, args.samples, limit, args.edges, use_numba=False)

        def run_nb():
            return _kernels.run_batch(t, 1, 0, args.samples, limit, args.edges, use_numba=True)

        t_np, out_np = best_of(run_np, args.repeat)
        if _kernels.HAVE_NUMBA:
            run_nb()  # compile outside the timed region
            t_nb, out_nb = best_of(run_nb, args.repeat)
            for a, b in zip(out_np, out_nb):
                assert np.array_equal(a, b), "back ends disagree"
            print(f"{name:32s} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:32s} {t_np:9.3f} {'-':>9s} {'-':>8s}")


if __name__ == "__main__":
    main()
