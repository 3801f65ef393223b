"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_backends.py [--n 20000] [--repeat 3]

Prints replications per second for each kernel and backend, and checks the
two backends return identical rows.
"""

import argparse
import time

import numpy as np

from ruinlab.kernels import backends
from ruinlab.simulate import estimate_exit_low, estimate_modified_ruin, estimate_ruin, interval_exit_batch
from ruinlab.verify import example_model, example_star_model


def workloads(model, star):
    return {
        "ruin u=0.1": lambda n, be: estimate_ruin(model, 0.1, n, seed=1, backend=be),
        "exit_low u=0.1 b=0.5": lambda n, be: estimate_exit_low(model, 0.1, 0.5, n, seed=1, backend=be),
        "modified u=0.1 a=b=0.3": lambda n, be: estimate_modified_ruin(model, star, 0.1, 0.3, 0.3, n, seed=1,
                                                                       backend=be),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=20_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    model, star = example_model(), example_star_model()
    names = sorted(backends())
    print(f"backends: {', '.join(names)}; n = {args.n}")
    a = interval_exit_batch(model, 0.1, 0.5, 2000, seed=1, backend="python")
    for be in names:
        same = np.array_equal(a, interval_exit_batch(model, 0.1, 0.5, 2000, seed=1, backend=be), equal_nan=True)
        print(f"  {be}: rows identical to python = {same}")
    print(f"{'workload':26s}" + "".join(f"{b + ' rep/s':>16s}" for b in names) + f"{'speedup':>10s}")
    for name, fn in workloads(model, star).items():
        rates = {be: args.n / best_of(lambda: fn(args.n, be), args.repeat) for be in names}
        speed = rates.get("cython", float("nan")) / rates["python"]
        print(f"{name:26s}" + "".join(f"{rates[b]:16.0f}" for b in names) + f"{speed:10.1f}")


if __name__ == "__main__":
    main()
