"""Compare the compiled moment kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Times the three hot paths (centering, the batch of cross-moments needed by
one GetRatio call at n_max = 8, and the polynomial variance behind the
sampling-noise gate) and checks that both backends agree.
"""

import argparse
import timeit

import numpy as np

from crossmoment.kernels import get_backend
from crossmoment.scm import STREAM_BENCH, make_rng


def ratio_pairs(n_max=8):
    pairs = {(k, 1) for k in range(1, n_max)} | {(1, k) for k in range(1, n_max)}
    pairs |= {(k, 0) for k in range(2, n_max - 1)} | {(0, k) for k in range(2, n_max)}
    return np.array(sorted(pairs), dtype=np.int64)


def run(n, repeat):
    rng = make_rng(0, STREAM_BENCH)
    a = rng.standard_exponential(n) - 1.0
    b = 0.7 * a + rng.standard_normal(n)
    pairs = ratio_pairs()
    exps = np.array([(1, 7), (1, 0), (0, 1), (0, 6), (1, 1)], dtype=np.int64)
    coeffs = np.array([1.0, -0.3, 0.2, -0.1, 0.05])

    backends = {}
    for name in ("cython", "python"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name}: not available")
    ac = {name: k.center(a) for name, k in backends.items()}
    bc = {name: k.center(b) for name, k in backends.items()}

    tasks = {
        "center": lambda k, nm: k.center(a),
        "cross_moments": lambda k, nm: k.cross_moments(ac[nm], bc[nm], pairs),
        "poly_variance": lambda k, nm: k.poly_variance(ac[nm], bc[nm], exps, coeffs),
    }
    timings = {}
    print(f"N = {n}, {len(pairs)} moment pairs, best of {repeat}")
    print(f"{'kernel':<15}" + "".join(f"{nm:>12}" for nm in backends) + f"{'speedup':>10}")
    for task, fn in tasks.items():
        row = {}
        for nm, k in backends.items():
            row[nm] = min(timeit.repeat(lambda: fn(k, nm), number=1, repeat=repeat))
        timings[task] = row
        speed = row["python"] / row["cython"] if len(row) == 2 else float("nan")
        print(f"{task:<15}" + "".join(f"{row[nm] * 1e3:>10.2f}ms" for nm in backends) + f"{speed:>9.1f}x")

    if len(backends) == 2:
        c = backends["cython"].cross_moments(ac["cython"], bc["cython"], pairs)
        p = backends["python"].cross_moments(ac["python"], bc["python"], pairs)
        rel = np.max(np.abs(c - p) / np.maximum(np.abs(p), 1e-300))
        print(f"max relative difference in cross-moments: {rel:.2e}")
    return timings


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    run(args.n, args.repeat)


if __name__ == "__main__":
    main()
