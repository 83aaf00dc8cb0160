"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from gundystein import _kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--grid", type=int, default=1000)
    ap.add_argument("--leaves", type=int, default=200_000)
    args = ap.parse_args()

    if _kernels.numba_impl is None:
        print("numba unavailable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    L, M = args.leaves, 8
    index = rng.integers(0, L // 4, size=L)
    values = rng.random(L)
    paths = np.cumsum(rng.standard_normal((M + 1, L)), axis=0)
    paths[0] = 0.0
    # p = 1/4, lambda = 1, beta = 2 at the requested grid
    n = args.grid
    coeffs = (16 * n, -8, -24, 96 * n, -24, 24)

    cases = {
        "segment_sum": lambda impl: impl.segment_sum(index, values, L // 4),
        "first_crossing": lambda impl: impl.first_crossing(paths, 1.5),
        "phi_lattice_argmin": lambda impl: impl.phi_lattice_argmin(*coeffs, n),
    }
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, call in cases.items():
        call(_kernels.numba_impl)  # compile outside the timed region
        t_np, out_np = best_of(lambda: call(_kernels.numpy_impl), args.repeat)
        t_nb, out_nb = best_of(lambda: call(_kernels.numba_impl), args.repeat)
        if isinstance(out_np, np.ndarray):
            assert np.allclose(out_np, out_nb)
        else:
            assert tuple(out_np) == tuple(out_nb)
        print(f"{name:<20}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}x")


if __name__ == "__main__":
    main()
