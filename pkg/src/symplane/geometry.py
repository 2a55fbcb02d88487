"""Core geometric types and primitive operations.

Conventions used throughout the toolkit:

* Planes are (normal, offset) pairs: the plane is {x : normal . x + offset = 0}
  with a unit normal. (n, d) and (-n, -d) describe the same plane; the
  canonical representative makes the largest-magnitude component of the
  normal strictly positive (ties broken by lowest index).
* Pixels are (u, v) = (column, row) integer pairs. u IS the column index:
  pixel (0, 0) is the top-left sample and there is no half-pixel offset.
* Extrinsics are world-to-camera: x_cam = R @ x_world + t. Unprojection of
  pixel (u, v) at depth z is x_cam = z * ((u - cx) / fx, (v - cy) / fy, 1),
  then x_world = R.T @ (x_cam - t). Depth means camera z, not ray length.
* All geometry is computed in float64. Grids are indexed [v, u] (row-major).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    InvalidInputError,
    InvalidPlaneError,
    NoDepthError,
    OutOfBoundsError,
)

#: Unit-norm tolerance for plane normals.
UNIT_TOLERANCE = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{what} contains non-finite values")


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Plane:
    """A 3D plane {x : normal . x + offset = 0} with unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(-1)
        if n.shape != (3,):
            raise InvalidPlaneError(f"plane normal must have 3 components, got {n.shape}")
        if not np.all(np.isfinite(n)) or not math.isfinite(float(self.offset)):
            raise InvalidPlaneError("plane entries must be finite")
        if abs(float(np.linalg.norm(n)) - 1.0) > UNIT_TOLERANCE:
            raise InvalidPlaneError(
                f"plane normal must be unit length within {UNIT_TOLERANCE}, "
                f"got norm {np.linalg.norm(n)!r}"
            )
        object.__setattr__(self, "normal", _readonly(n))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def is_canonical(self) -> bool:
        idx = int(np.argmax(np.abs(self.normal)))
        return bool(self.normal[idx] > 0.0)

    def __repr__(self):
        n = self.normal
        return f"Plane(normal=({n[0]:.9g}, {n[1]:.9g}, {n[2]:.9g}), offset={self.offset:.9g})"


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An unordered set of 3D points, stored as an (N, 3) array."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3:
            raise InvalidInputError(f"point cloud must be (N, 3), got {p.shape}")
        _require_finite(p, "point cloud")
        object.__setattr__(self, "points", _readonly(p))

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class PointMap:
    """Per-pixel 3D points with a validity mask (both (H, W) grids)."""

    points: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        m = np.asarray(self.valid, dtype=bool)
        if p.ndim != 3 or p.shape[2] != 3:
            raise InvalidInputError(f"point map must be (H, W, 3), got {p.shape}")
        if m.shape != p.shape[:2]:
            raise InvalidInputError(
                f"validity mask {m.shape} does not match point grid {p.shape[:2]}"
            )
        if not np.all(np.isfinite(p[m])):
            raise InvalidInputError("point map has non-finite points marked valid")
        object.__setattr__(self, "points", _readonly(p))
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "valid", m)

    @property
    def height(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]

    def valid_points(self) -> np.ndarray:
        """The valid points as a flat (M, 3) array (row-major pixel order)."""
        return self.points[self.valid]


@dataclass(frozen=True, eq=False)
class DepthMap:
    """A (H, W) grid of positive depths; NaN marks invalid pixels."""

    depth: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise InvalidInputError(f"depth map must be (H, W), got {d.shape}")
        bad = ~(np.isnan(d) | (np.isfinite(d) & (d > 0.0)))
        if np.any(bad):
            raise InvalidInputError("depth values must be positive and finite (or NaN)")
        object.__setattr__(self, "depth", _readonly(d))

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth)


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera: intrinsics (fx, fy, cx, cy) and world-to-camera (R, t)."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidInputError(f"camera {name} must be finite")
            object.__setattr__(self, name, v)
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise InvalidInputError("camera focal lengths must be positive")
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if r.shape != (3, 3):
            raise InvalidInputError(f"camera rotation must be (3, 3), got {r.shape}")
        if t.shape != (3,):
            raise InvalidInputError(f"camera translation must be (3,), got {t.shape}")
        _require_finite(r, "camera rotation")
        _require_finite(t, "camera translation")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise InvalidInputError("camera rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", _readonly(r))
        object.__setattr__(self, "translation", _readonly(t))

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates (-R^T t)."""
        return -(self.rotation.T @ self.translation)


@dataclass(frozen=True, eq=False)
class SignedDistanceMap:
    """Per-pixel signed distances to a plane, with optional confidence."""

    values: np.ndarray
    valid: np.ndarray
    confidence: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.values, dtype=np.float64)
        m = np.asarray(self.valid, dtype=bool)
        if s.ndim != 2:
            raise InvalidInputError(f"signed-distance grid must be (H, W), got {s.shape}")
        if m.shape != s.shape:
            raise InvalidInputError("validity mask does not match the value grid")
        if not np.all(np.isfinite(s[m])):
            raise InvalidInputError("signed distances marked valid must be finite")
        object.__setattr__(self, "values", _readonly(s))
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "valid", m)
        if self.confidence is not None:
            c = np.asarray(self.confidence, dtype=np.float64)
            if c.shape != s.shape:
                raise InvalidInputError("confidence grid does not match the value grid")
            cv = c[m]
            if not np.all(np.isfinite(cv)) or np.any(cv <= 0.0):
                raise InvalidInputError("confidence must be finite and > 0 on valid pixels")
            object.__setattr__(self, "confidence", _readonly(c))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def canonicalize(plane, offset=None) -> Plane:
    """Return the canonical representative of a plane.

    Accepts either a Plane or a raw (normal, offset) pair. The normal need
    not be unit length: normal and offset are rescaled jointly by 1/||n||,
    which leaves the plane itself unchanged. The canonical representative
    makes the largest-magnitude normal component strictly positive, ties
    broken by lowest component index; (n, d) and (-n, -d) map to the same
    output.
    """
    if isinstance(plane, Plane):
        if offset is not None:
            raise InvalidInputError("pass either a Plane or (normal, offset), not both")
        n = np.array(plane.normal, dtype=np.float64)
        d = plane.offset
    else:
        n = np.asarray(plane, dtype=np.float64).reshape(-1)
        if n.shape != (3,):
            raise InvalidPlaneError(f"plane normal must have 3 components, got {n.shape}")
        if offset is None:
            raise InvalidInputError("offset is required with a raw normal")
        d = float(offset)
    if not np.all(np.isfinite(n)) or not math.isfinite(d):
        raise InvalidPlaneError("plane entries must be finite")
    norm = float(np.linalg.norm(n))
    if norm <= 0.0:
        raise InvalidPlaneError("plane normal must have positive length")
    if abs(norm - 1.0) > UNIT_TOLERANCE:  # don't perturb already-unit normals
        n = n / norm
        d = d / norm
    idx = int(np.argmax(np.abs(n)))
    if n[idx] < 0.0:
        n = -n
        d = -d
    return Plane(n, d)


def signed_distance(plane: Plane, point) -> float:
    """Signed distance from a point to the plane (normal . p + offset)."""
    p = np.asarray(point, dtype=np.float64).reshape(-1)
    if p.shape != (3,):
        raise InvalidInputError(f"point must have 3 components, got {p.shape}")
    return float(plane.normal @ p + plane.offset)


def signed_distances(plane: Plane, points) -> np.ndarray:
    """Signed distances for an (N, 3) array of points."""
    return _kernels.signed_distances(plane.normal, plane.offset, points)


def reflect_point(plane: Plane, point) -> np.ndarray:
    """Reflect a point across the plane: p - 2 (normal . p + offset) normal."""
    p = np.asarray(point, dtype=np.float64).reshape(-1)
    if p.shape != (3,):
        raise InvalidInputError(f"point must have 3 components, got {p.shape}")
    s = plane.normal @ p + plane.offset
    return p - 2.0 * s * plane.normal


def reflect_points(plane: Plane, points) -> np.ndarray:
    """Reflect an (N, 3) array of points across the plane."""
    return _kernels.reflect_points(plane.normal, plane.offset, points)


def reflect_cloud(plane: Plane, cloud: PointCloud) -> PointCloud:
    """Reflect a whole cloud across the plane."""
    return PointCloud(_kernels.reflect_points(plane.normal, plane.offset, cloud.points))


def _pixel_index(value, size: int, what: str) -> int:
    try:
        idx = int(value)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"pixel {what} must be an integer, got {value!r}") from exc
    if idx != value:
        raise InvalidInputError(f"pixel {what} must be an integer, got {value!r}")
    if idx < 0 or idx >= size:
        raise OutOfBoundsError(f"pixel {what}={idx} outside [0, {size})")
    return idx


def unproject(depth: DepthMap, camera: CameraModel, pixel) -> np.ndarray:
    """Unproject pixel (u, v) of a depth map to a world-space point.

    u is the column index and v the row index, both exact integers. Raises
    OutOfBoundsError outside the image and NoDepthError on an invalid pixel.
    """
    u, v = pixel
    ui = _pixel_index(u, depth.width, "u")
    vi = _pixel_index(v, depth.height, "v")
    z = depth.depth[vi, ui]
    if not np.isfinite(z):
        raise NoDepthError(f"no valid depth at pixel (u={ui}, v={vi})")
    cam = np.array(
        [
            z * (ui - camera.cx) / camera.fx,
            z * (vi - camera.cy) / camera.fy,
            z,
        ]
    )
    return camera.rotation.T @ (cam - camera.translation)


def unproject_map(depth: DepthMap, camera: CameraModel) -> PointMap:
    """Unproject every valid pixel of a depth map into a PointMap."""
    valid = depth.valid
    points = np.zeros((depth.height, depth.width, 3))
    vs, us = np.nonzero(valid)
    if vs.size:
        z = depth.depth[vs, us]
        cam = np.empty((vs.size, 3))
        cam[:, 0] = z * (us - camera.cx) / camera.fx
        cam[:, 1] = z * (vs - camera.cy) / camera.fy
        cam[:, 2] = z
        points[vs, us] = (cam - camera.translation) @ camera.rotation
    return PointMap(points, valid)


def project_points(camera: CameraModel, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project (N, 3) world points to float pixel coordinates and depths.

    Returns (u, v, z); z <= 0 means the point is behind the camera and the
    corresponding (u, v) are meaningless. No bounds clipping is applied.
    """
    p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cam = p @ camera.rotation.T + camera.translation
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = camera.fx * cam[:, 0] / z + camera.cx
        v = camera.fy * cam[:, 1] / z + camera.cy
    return u, v, z


def cloud_diameter(points) -> float:
    """Maximum pairwise distance of a point set.

    Exact for up to 2048 points; larger inputs are deterministically
    subsampled with the axis-extreme points always included, which bounds the
    result within the bounding-box diagonal (the value is used for relative
    thresholds, not for reported metrics).
    """
    if isinstance(points, PointCloud):
        points = points.points
    p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    if p.shape[0] < 2:
        return 0.0
    if p.shape[0] > 2048:
        stride = int(np.ceil(p.shape[0] / 2036))
        extremes = np.concatenate([np.argmin(p, axis=0), np.argmax(p, axis=0)])
        keep = np.unique(np.concatenate([np.arange(0, p.shape[0], stride), extremes]))
        p = p[keep]
    d2 = np.sum((p[:, None, :] - p[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(d2.max()))
