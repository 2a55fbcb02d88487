"""Time the compiled kernels against the pure-numpy fallback.

Runs every kernel on identical inputs through both backends, checks that
the outputs agree, and prints a table of best-of-N wall times. Usage:

    python3 benchmarks/bench_kernels.py [--repeats 5] [--scale 1.0]

``--scale`` multiplies the workload sizes (0.1 for a quick look, 4 for a
steadier signal on fast machines).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from symplane._kernels import backend_numpy

try:
    from symplane._kernels import _native
except ImportError:
    _native = None


def _best_of(fn, repeats):
    best = float("inf")
    fn()  # warm up allocators and caches
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _workloads(scale):
    rng = np.random.Generator(np.random.Philox([12345]))
    n_pts = max(1000, int(200_000 * scale))
    n_pairs = max(1000, int(100_000 * scale))
    n_hyp = max(16, int(256 * scale))
    n_ransac = max(500, int(5000 * scale))
    n_planes = max(32, int(400 * scale))
    n_splat = max(2000, int(500_000 * scale))

    normal = np.array([0.6, -0.64, 0.48])
    normal /= np.linalg.norm(normal)
    offset = 0.37
    points = rng.normal(size=(n_pts, 3))
    first = rng.normal(size=(n_pairs, 3))
    second = rng.normal(size=(n_pairs, 3))

    hyp_normals = rng.normal(size=(n_hyp, 3))
    hyp_normals /= np.linalg.norm(hyp_normals, axis=1, keepdims=True)
    hyp_offsets = rng.uniform(-1.0, 1.0, n_hyp)
    r_first = rng.normal(size=(n_ransac, 3))
    r_second = rng.normal(size=(n_ransac, 3))

    plane_normals = rng.normal(size=(n_planes, 3))
    plane_normals /= np.linalg.norm(plane_normals, axis=1, keepdims=True)
    # canonical hemisphere, like clustering inputs
    flip = plane_normals[np.arange(n_planes), np.abs(plane_normals).argmax(1)] < 0
    plane_normals[flip] *= -1.0
    plane_offsets = rng.uniform(-1.0, 1.0, n_planes)

    height, width = 480, 640
    u = rng.integers(0, width, n_splat)
    v = rng.integers(0, height, n_splat)
    z = rng.uniform(0.5, 5.0, n_splat)

    # last field: agreement tolerance; arccos near |dot|=1 amplifies 1-ulp
    # dot differences between the backends to ~1e-8 rad, so the plane metric
    # gets the same slack its unit tests use
    return [
        ("reflect_points", f"{n_pts:,} pts",
         lambda impl: impl.reflect_points(normal, offset, points), 1e-12),
        ("signed_distances", f"{n_pts:,} pts",
         lambda impl: impl.signed_distances(normal, offset, points), 1e-12),
        ("pair_residual_norms", f"{n_pairs:,} pairs",
         lambda impl: impl.pair_residual_norms(normal, offset, first, second), 1e-12),
        ("ransac_inlier_counts", f"{n_hyp} x {n_ransac:,}",
         lambda impl: impl.ransac_inlier_counts(
             hyp_normals, hyp_offsets, r_first, r_second, 0.05), 0.0),
        ("plane_distance_matrix", f"{n_planes} planes",
         lambda impl: impl.plane_distance_matrix(
             plane_normals, plane_offsets, np.radians(5.0), 0.02), 1e-5),
        ("zbuffer_splat", f"{n_splat:,} splats",
         lambda impl: impl.zbuffer_splat(
             u.astype(np.int64), v.astype(np.int64), z, height, width), 0.0),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0)
    args = parser.parse_args()

    if _native is None:
        print("compiled backend not available; timing numpy only")

    rows = []
    for name, size, call, tolerance in _workloads(args.scale):
        baseline = call(backend_numpy)
        t_numpy = _best_of(lambda: call(backend_numpy), args.repeats)
        if _native is not None:
            got = call(_native)
            if not np.array_equal(
                np.asarray(got), np.asarray(baseline), equal_nan=True
            ):
                diff = float(np.nanmax(np.abs(np.asarray(got) - np.asarray(baseline))))
                if diff > tolerance:
                    raise AssertionError(f"{name}: backends disagree by {diff:g}")
            t_native = _best_of(lambda: call(_native), args.repeats)
            rows.append((name, size, t_numpy, t_native))
        else:
            rows.append((name, size, t_numpy, None))

    header = f"{'kernel':<24}{'workload':<18}{'numpy':>10}{'native':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, size, t_numpy, t_native in rows:
        if t_native is None:
            print(f"{name:<24}{size:<18}{t_numpy * 1e3:>8.2f}ms{'-':>10}{'-':>9}")
        else:
            print(
                f"{name:<24}{size:<18}{t_numpy * 1e3:>8.2f}ms"
                f"{t_native * 1e3:>8.2f}ms{t_numpy / t_native:>8.1f}x"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
