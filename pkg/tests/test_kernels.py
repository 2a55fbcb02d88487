import os
import subprocess
import sys

import numpy as np
import pytest

from symplane._kernels import BACKEND, backend_numpy, zbuffer_splat

from helpers import make_rng, random_unit

try:
    from symplane._kernels import _native
except ImportError:  # pragma: no cover - build without compiler
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="compiled kernels not built")


def _pair_data(rng, n=500):
    normal = random_unit(rng)
    offset = float(rng.uniform(-2, 2))
    first = rng.normal(size=(n, 3)) * 3.0
    second = rng.normal(size=(n, 3)) * 3.0
    return normal, offset, first, second


@needs_native
def test_reflect_and_distances_agree():
    rng = make_rng([21, 0])
    for _ in range(20):
        normal, offset, first, _ = _pair_data(rng)
        a = backend_numpy.reflect_points(normal, offset, first)
        b = _native.reflect_points(normal, offset, first)
        assert np.allclose(a, b, rtol=0.0, atol=1e-12)
        sa = backend_numpy.signed_distances(normal, offset, first)
        sb = _native.signed_distances(normal, offset, first)
        assert np.allclose(sa, sb, rtol=0.0, atol=1e-12)


@needs_native
def test_pair_residual_norms_agree():
    rng = make_rng([21, 1])
    for _ in range(20):
        normal, offset, first, second = _pair_data(rng)
        a = backend_numpy.pair_residual_norms(normal, offset, first, second)
        b = _native.pair_residual_norms(normal, offset, first, second)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_native
def test_ransac_counts_agree_exactly():
    rng = make_rng([21, 2])
    for _ in range(10):
        _, _, first, second = _pair_data(rng, n=400)
        k = 64
        normals = np.stack([random_unit(rng) for _ in range(k)])
        offsets = rng.uniform(-2, 2, size=k)
        t = float(rng.uniform(0.05, 1.0))
        a = backend_numpy.ransac_inlier_counts(normals, offsets, first, second, t)
        b = _native.ransac_inlier_counts(normals, offsets, first, second, t)
        assert np.array_equal(a, b)


@needs_native
def test_plane_distance_matrix_agree():
    rng = make_rng([21, 3])
    for _ in range(10):
        k = 40
        normals = np.stack([random_unit(rng) for _ in range(k)])
        offsets = rng.uniform(-2, 2, size=k)
        a = backend_numpy.plane_distance_matrix(normals, offsets, 0.1, 0.02)
        b = _native.plane_distance_matrix(normals, offsets, 0.1, 0.02)
        # arccos near |dot|=1 amplifies 1-ulp dot differences to ~1e-8 rad
        assert np.allclose(a, b, rtol=0.0, atol=1e-5)
        assert np.allclose(np.diag(b), 0.0, atol=1e-6)


@needs_native
def test_zbuffer_agrees_exactly():
    rng = make_rng([21, 4])
    for _ in range(10):
        n = 2000
        h, w = 24, 32
        u = rng.integers(0, w, size=n)
        v = rng.integers(0, h, size=n)
        z = rng.uniform(0.5, 5.0, size=n)
        z[rng.random(n) < 0.2] = 1.25  # force exact ties
        da, wa = backend_numpy.zbuffer_splat(u, v, z, h, w)
        db, wb = _native.zbuffer_splat(
            u.astype(np.int64), v.astype(np.int64), z, h, w
        )
        assert np.array_equal(np.isnan(da), np.isnan(db))
        assert np.array_equal(da[~np.isnan(da)], db[~np.isnan(db)])
        assert np.array_equal(wa, wb)


def test_zbuffer_tie_keeps_lowest_index():
    u = np.array([3, 3, 3], dtype=np.int64)
    v = np.array([1, 1, 1], dtype=np.int64)
    z = np.array([2.0, 2.0, 5.0])
    depth, winner = zbuffer_splat(u, v, z, 4, 8)
    assert depth[1, 3] == 2.0
    assert winner[1, 3] == 0
    assert np.isnan(depth[0, 0]) and winner[0, 0] == -1


def test_zbuffer_empty_input():
    depth, winner = zbuffer_splat(
        np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0), 2, 2
    )
    assert np.isnan(depth).all()
    assert (winner == -1).all()


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("SYMPLANE_KERNELS", None)
    else:
        env["SYMPLANE_KERNELS"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "import symplane; print(symplane.KERNEL_BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )
    return out


def test_backend_env_selection():
    out = _backend_in_subprocess("numpy")
    assert out.returncode == 0 and out.stdout.strip() == "numpy"
    out = _backend_in_subprocess("bogus")
    assert out.returncode != 0

    if _native is not None:
        out = _backend_in_subprocess("native")
        assert out.returncode == 0 and out.stdout.strip() == "native"
        assert BACKEND == "native"
