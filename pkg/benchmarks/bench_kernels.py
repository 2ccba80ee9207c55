"""Compare the compiled and pure-Python allocation kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--skip-scenario]
"""

import argparse
import time
import timeit

import numpy as np

from slicesim import kernels
from slicesim.engine import run
from slicesim.scenario import load_scenario


def cascade_case(n_sessions, n_slices, seed=0):
    rng = np.random.default_rng(seed)
    demand = rng.uniform(0.0, 10.0, n_sessions)
    rank = rng.integers(0, n_slices, n_sessions).astype(np.int64)
    eps = np.full(n_slices, 0.03)
    capacity = 0.6 * demand.sum()
    return capacity, demand, rank, eps


def bench_cascade(kernel, case, repeat):
    capacity, demand, rank, eps = case
    out = np.zeros_like(demand)
    number = 2000
    best = min(timeit.repeat(lambda: kernel.cascade(capacity, demand, rank, eps, out), number=number, repeat=repeat))
    return best / number


def bench_scenario(kernel, name):
    sc = load_scenario(name)
    t0 = time.perf_counter()
    trace = run(sc, kernel=kernel)
    return time.perf_counter() - t0, trace.csv_text()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-scenario", action="store_true")
    args = parser.parse_args(argv)

    backends = {name: kernels.get(name) for name in kernels.available()}
    if len(backends) == 1:
        print("compiled kernels not built; only the python backend is timed")

    print(f"{'case':<28}" + "".join(f"{n:>14}" for n in backends) + f"{'speedup':>10}")
    for n_sessions, n_slices in ((125, 2), (1000, 4), (10000, 8)):
        case = cascade_case(n_sessions, n_slices)
        times = {n: bench_cascade(k, case, args.repeat) for n, k in backends.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        label = f"cascade {n_sessions}x{n_slices}"
        print(f"{label:<28}" + "".join(f"{t * 1e6:>11.1f} us" for t in times.values()) + f"{speed:>9.1f}x")

    if not args.skip_scenario:
        results = {n: bench_scenario(k, "scenario1") for n, k in backends.items()}
        times = {n: r[0] for n, r in results.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{'scenario1 full run':<28}" + "".join(f"{t:>12.2f} s" for t in times.values()) + f"{speed:>9.1f}x")
        traces = {r[1] for r in results.values()}
        print(f"traces identical across backends: {len(traces) == 1}")


if __name__ == "__main__":
    main()
