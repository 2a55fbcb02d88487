"""Hot numeric kernels: compiled core with a pure-numpy fallback.

The Cython extension (``symplane._kernels._native``) is preferred when it
imported successfully; otherwise the numpy backend serves every call. Set the
environment variable ``SYMPLANE_KERNELS`` to ``numpy`` or ``native`` to force
one side (``native`` raises if the extension is missing); ``auto`` is the
default. The active choice is exposed as ``BACKEND``.

Wrappers coerce arguments to contiguous float64/int64 so both backends see
identical data, and keep reductions out of the backends where summation order
would make results diverge.
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from . import backend_numpy

_native_mod = None
_requested = os.environ.get("SYMPLANE_KERNELS", "auto").strip().lower() or "auto"
if _requested not in ("auto", "native", "numpy"):
    raise RuntimeError(
        f"SYMPLANE_KERNELS must be 'auto', 'native', or 'numpy', got {_requested!r}"
    )
if _requested in ("auto", "native"):
    try:
        _native_mod = importlib.import_module("._native", __name__)
    except ImportError:
        if _requested == "native":
            raise
        _native_mod = None

_impl = _native_mod if _native_mod is not None else backend_numpy
BACKEND: str = "native" if _native_mod is not None else "numpy"


def _f64(a, shape=None):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if shape is not None:
        out = out.reshape(shape)
    return out


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def reflect_points(normal, offset, points):
    return _impl.reflect_points(_f64(normal, (3,)), float(offset), _f64(points, (-1, 3)))


def signed_distances(normal, offset, points):
    return _impl.signed_distances(_f64(normal, (3,)), float(offset), _f64(points, (-1, 3)))


def pair_residual_norms(normal, offset, first, second):
    return _impl.pair_residual_norms(
        _f64(normal, (3,)), float(offset), _f64(first, (-1, 3)), _f64(second, (-1, 3))
    )


def ransac_inlier_counts(normals, offsets, first, second, threshold):
    return _impl.ransac_inlier_counts(
        _f64(normals, (-1, 3)),
        _f64(offsets, (-1,)),
        _f64(first, (-1, 3)),
        _f64(second, (-1, 3)),
        float(threshold),
    )


def plane_distance_matrix(normals, offsets, angle_scale, offset_scale):
    return _impl.plane_distance_matrix(
        _f64(normals, (-1, 3)), _f64(offsets, (-1,)), float(angle_scale), float(offset_scale)
    )


def zbuffer_splat(u, v, z, height, width):
    return _impl.zbuffer_splat(_i64(u), _i64(v), _f64(z, (-1,)), int(height), int(width))
