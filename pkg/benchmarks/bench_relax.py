"""Compare the relaxation backends on random models.

    python3 benchmarks/bench_relax.py --features 200 --components 800 --p 0.02

Each backend converges the same initial state; results must be identical.
Timings are the best of ``--repeat`` runs, after one warm-up call (which
also triggers numba compilation).
"""

import argparse
import time

import numpy as np

from spltrace.dv import build_neighbor_graph, converge, init_tables
from spltrace.kernels import BACKENDS, NUMBA_AVAILABLE
from spltrace.partition import allocate_addresses, derive_partition, identify_routers
from spltrace.synth import random_model


def initial_state(n_features, n_components, p, seed):
    model = random_model(np.random.default_rng(seed), n_features, n_components, p)
    part = derive_partition(model)
    plan = allocate_addresses(model, part)
    routers = identify_routers(part)
    return init_tables(part, routers, build_neighbor_graph(part, routers), plan)


def run(n_features, n_components, p, seed=0, repeat=3, backends=None):
    """Return ``{backend: (seconds, rounds)}``."""
    state = initial_state(n_features, n_components, p, seed)
    backends = backends or [b for b in BACKENDS if b != "numba" or NUMBA_AVAILABLE]
    results, reference = {}, None
    for b in backends:
        converge(state, backend=b)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = converge(state, backend=b)
            best = min(best, time.perf_counter() - t0)
        if reference is None:
            reference = out
        elif not out.same_tables(reference):
            raise AssertionError(f"backend {b} disagrees with {backends[0]}")
        results[b] = (best, out.rounds_run)
    return state, results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--features", type=int, default=120)
    ap.add_argument("--components", type=int, default=500)
    ap.add_argument("--p", type=float, default=0.03)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--backends", nargs="+", choices=BACKENDS)
    args = ap.parse_args(argv)

    state, results = run(args.features, args.components, args.p, args.seed, args.repeat, args.backends)
    print(f"routers={len(state.routers)} subnets={len(state.subnets)} edges={len(state.edge_nbr)}")
    base = results.get("numpy", next(iter(results.values())))[0]
    for b, (secs, rounds) in results.items():
        print(f"{b:7s} {secs * 1e3:10.2f} ms  rounds={rounds}  x{base / secs:.1f} vs numpy")


if __name__ == "__main__":
    main()
