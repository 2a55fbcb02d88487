"""Similarity alignment between corresponding point sets.

Predicted geometry lives in an arbitrary scaled frame; ground truth in
metric world coordinates. A similarity transform T(x) = s R x + t estimated
from positionally corresponding points (k-th source to k-th target — point
maps are pixel-aligned, so no association step is needed) carries ground
truth into the predicted frame. Planes ride along via transform_plane.

The estimator is the closed-form least-squares solution from the
cross-covariance SVD, with the determinant sign guard that keeps R a proper
rotation even when noise would prefer a reflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfigurationError, InsufficientDataError, InvalidInputError
from .geometry import (
    Plane,
    PointCloud,
    PointMap,
    canonicalize,
    _readonly,
    _require_finite,
)

__all__ = [
    "SimilarityTransform",
    "estimate_similarity",
    "estimate_similarity_from_maps",
    "transform_plane",
]


@dataclass(frozen=True, eq=False)
class SimilarityTransform:
    """T(x) = scale * rotation @ x + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        s = float(self.scale)
        if not (math.isfinite(s) and s > 0.0):
            raise InvalidInputError(f"scale must be positive and finite, got {s}")
        r = np.asarray(self.rotation, dtype=np.float64)
        if r.shape != (3, 3) or not np.all(np.isfinite(r)):
            raise InvalidInputError("rotation must be a finite 3x3 matrix")
        if np.abs(r @ r.T - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise InvalidInputError("rotation must be orthonormal with determinant +1")
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if t.shape != (3,):
            raise InvalidInputError(f"translation must have 3 components, got {t.shape}")
        _require_finite(t, "translation")
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "rotation", _readonly(r))
        object.__setattr__(self, "translation", _readonly(t))

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Transform a point or an (N, 3) array of points."""
        p = np.asarray(points, dtype=np.float64)
        return self.scale * (p @ self.rotation.T) + self.translation

    def compose(self, inner: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equal to applying `inner` first, then this one."""
        return SimilarityTransform(
            self.scale * inner.scale,
            self.rotation @ inner.rotation,
            self.scale * (self.rotation @ inner.translation) + self.translation,
        )

    def inverse(self) -> "SimilarityTransform":
        rt = self.rotation.T
        return SimilarityTransform(
            1.0 / self.scale, rt, -(rt @ self.translation) / self.scale
        )


def estimate_similarity(source: PointCloud, target: PointCloud) -> SimilarityTransform:
    """Least-squares similarity mapping source[k] onto target[k].

    Closed form: centered cross-covariance C = mean((t - t̄)(s - s̄)ᵀ) is
    SVD-decomposed, the rotation is the sign-guarded polar factor, the scale
    the guarded singular-value sum over the source variance. Minimizes
    Σ ||s·R·source_k + t − target_k||². Requires ≥ 3 pairs and a source of
    covariance rank ≥ 2 (collinear input leaves a free rotation).
    """
    a = source.points if isinstance(source, PointCloud) else np.asarray(source, dtype=np.float64)
    b = target.points if isinstance(target, PointCloud) else np.asarray(target, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3 or b.shape != a.shape:
        raise InvalidInputError(
            f"source and target must be matching (N, 3) arrays, got {a.shape} and {b.shape}"
        )
    n = a.shape[0]
    if n < 3:
        raise InsufficientDataError(f"need at least 3 correspondences, got {n}")
    mu_s = a.mean(axis=0)
    mu_t = b.mean(axis=0)
    ac = a - mu_s
    bc = b - mu_t
    var_s = float(np.einsum("ij,ij->", ac, ac)) / n
    cov = (bc.T @ ac) / n
    u, d, vt = np.linalg.svd(cov)
    src_scatter_rank2 = np.linalg.svd(ac, compute_uv=False)
    if var_s <= 0.0 or src_scatter_rank2[1] <= 1e-12 * src_scatter_rank2[0]:
        raise DegenerateConfigurationError(
            "source points are (near-)collinear; the rotation is underdetermined"
        )
    sign = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        sign[2] = -1.0
    rotation = (u * sign) @ vt
    scale = float(d @ sign) / var_s
    translation = mu_t - scale * (rotation @ mu_s)
    return SimilarityTransform(scale, rotation, translation)


def estimate_similarity_from_maps(source: PointMap, target: PointMap) -> SimilarityTransform:
    """Similarity between pixel-aligned point maps.

    Only pixels valid in both maps enter the sums; the correspondence is
    positional (same pixel, same k).
    """
    if source.points.shape != target.points.shape:
        raise InvalidInputError(
            f"point maps must share dimensions, got {source.points.shape[:2]} "
            f"and {target.points.shape[:2]}"
        )
    both = source.valid & target.valid
    count = int(both.sum())
    if count < 3:
        raise InsufficientDataError(f"only {count} jointly valid pixels, need 3")
    return estimate_similarity(
        PointCloud(source.points[both]), PointCloud(target.points[both])
    )


def transform_plane(transform: SimilarityTransform, plane: Plane) -> Plane:
    """The plane's image under T: points of the plane map onto the result.

    n' = R n and d' = s d − n'ᵀ t, so n'ᵀ T(x) + d' = s (nᵀ x + d): signed
    distances scale by s and on-plane points stay on-plane. The result is
    canonical.
    """
    normal = transform.rotation @ plane.normal
    offset = transform.scale * plane.offset - float(normal @ transform.translation)
    return canonicalize(normal, offset)
