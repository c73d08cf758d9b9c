"""Compiled core against the numpy fallback on the two hot loops.

Usage: ``python benchmarks/bench_kernels.py [--repeat 3] [--scale 1]``.
Prints one row per workload with the best wall time of each backend and
the maximum discrepancy between their outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hcremez import _pykernels
from hcremez.indexsets import hyperbolic_cross, pack_origin
from hcremez.kernels import hyperbolic_vp_separable, layer_vp_separable
from hcremez.measure import Grid
from hcremez.spectral import _half_weights

try:
    from hcremez import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def convolve_case(N, d, rng):
    cross = hyperbolic_cross(N, d)
    f = rng.standard_normal(len(cross)) + 1j * rng.standard_normal(len(cross))
    V = hyperbolic_vp_separable(N, d).to_trigpoly()
    args = (cross.packed, f, V.packed, V.coeffs.astype(np.complex128), int(pack_origin(d)))
    return f"sparse_convolve Gamma({N}) x V_{N}, d={d}", args, lambda a, b: _cmp_sparse(a, b)


def _sorted(keys, vals):
    keys = np.asarray(keys)
    order = np.lexsort(keys.T[::-1])
    return keys[order], np.asarray(vals)[order]


def _cmp_sparse(a, b):
    ka, va = _sorted(*a)
    kb, vb = _sorted(*b)
    if not np.array_equal(ka, kb):
        return float("inf")
    return float(np.max(np.abs(va - vb)))


def reduce_case(sp, label, oversample):
    grid = Grid.for_degree(sp.max_degree(), oversample)
    G1, G2 = grid.sizes
    U, W = sp.factor_values(grid, half=True)
    args = (np.ascontiguousarray(U), np.ascontiguousarray(W), _half_weights(G1), _half_weights(G2),
            np.array([1.0, 2.0]))
    return f"separable_reduce {label} on {G1}x{G2}", args, lambda a, b: abs(a[0] - b[0]) + float(
        np.max(np.abs(np.asarray(a[1]) - np.asarray(b[1])) / np.maximum(np.abs(b[1]), 1)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=int, default=1, help="multiply problem sizes by this power of two")
    args = ap.parse_args(argv)
    s = 1 << max(args.scale - 1, 0)
    rng = np.random.default_rng(0)
    cases = [
        convolve_case(32 * s, 2, rng),
        convolve_case(128 * s, 2, rng),
        convolve_case(16 * s, 3, rng),
        reduce_case(hyperbolic_vp_separable(64 * s, 2), f"V_{64 * s}", 2),
        reduce_case(layer_vp_separable(8 + args.scale, 2), f"dV_{8 + args.scale}", 2),
    ]
    print(f"{'workload':48s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for label, a, cmp in cases:
        name = "sparse_convolve" if label.startswith("sparse") else "separable_reduce"
        tp, outp = best_time(lambda: getattr(_pykernels, name)(*a), args.repeat)
        if _ckernels is None:
            print(f"{label:48s} {tp:11.4f} {'n/a':>11s} {'n/a':>8s} {'n/a':>10s}")
            continue
        tc, outc = best_time(lambda: getattr(_ckernels, name)(*a), args.repeat)
        print(f"{label:48s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {cmp(outc, outp):10.2e}")


if __name__ == "__main__":
    main()
