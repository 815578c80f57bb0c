"""Time the pairwise kernels under both backends.

    python3 benchmarks/bench_kernels.py [--sizes 500 1000 2000] [--repeat 3]

The numba column is missing when numba is unavailable. Each timing is the
best of ``--repeat`` runs after one warm-up call (which also compiles).
"""
import argparse
import time

import numpy as np

from smallscat import kernels
from smallscat.kernels import _numpy as np_impl

try:
    from smallscat.kernels import _jit as jit_impl
except ImportError:  # pragma: no cover
    jit_impl = None


def _lattice(n):
    # deterministic, well separated points
    side = int(np.ceil(n ** (1 / 3)))
    g = np.stack(np.meshgrid(*[np.arange(side)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    return np.ascontiguousarray(g[:n] / side, dtype=np.float64)


def _cases(n):
    pts = _lattice(n)
    idx = np.arange(n, dtype=np.float64)
    pol = np.zeros((n, 3, 3), dtype=np.complex128)
    pol[:] = np.eye(3) * (1e-3 + 2e-4j)
    w = np.stack([np.cos(idx), np.sin(idx), np.cos(2 * idx)], axis=1).astype(np.complex128)
    zeros = np.zeros((n, 3, 3), dtype=np.complex128)
    k = 1.0 + 0j
    skip = np.full(n, -1, dtype=np.int64)
    return {
        "coupling_matrix": lambda m: m.coupling_matrix(pts, pol, k, zeros),
        "coupling_apply": lambda m: m.coupling_apply(pts, w, k),
        "dipole_sum": lambda m: m.dipole_sum(pts + 0.5 / n, pts, w, k, skip),
    }


def _best(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<16} {'n':>6} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max rel diff':>13}")
    for n in args.sizes:
        for name, call in _cases(n).items():
            t_np = _best(lambda: call(np_impl), args.repeat)
            if jit_impl is None:
                print(f"{name:<16} {n:>6} {t_np:>10.4f} {'-':>10} {'-':>8} {'-':>13}")
                continue
            t_jit = _best(lambda: call(jit_impl), args.repeat)
            a, b = call(np_impl), call(jit_impl)
            diff = np.abs(a - b).max() / np.abs(a).max()
            print(f"{name:<16} {n:>6} {t_np:>10.4f} {t_jit:>10.4f} {t_np / t_jit:>8.1f} {diff:>13.1e}")


if __name__ == "__main__":
    main()
