"""Candidate-plane aggregation.

Every usable image pair contributes one noisy plane estimate; scenes end up
with hundreds to thousands of candidates concentrated around the few true
symmetry planes. DBSCAN over a composite plane metric collapses them into
high-confidence annotations.

The metric treats a plane as (normal direction, offset) and charges the two
parts separately:

    distance = arccos(min(1, |n_a . n_b|)) / angle_scale
             + |d_a - d_b| / offset_scale

computed on canonical representatives. Canonicalizing globally (rather than
picking the best relative sign per pair) keeps the triangle inequality: with
per-pair signs, three mutually near-orthogonal planes can violate it.

DBSCAN here is weight-aware: a candidate is a core point when the total
candidate *weight* within eps reaches min_points, so a single plane backed
by many inlier pairs can anchor a cluster on its own. Iteration order,
neighbor ordering, and tie-breaking are all fixed by candidate index, making
the output independent of input permutation up to relabeling.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import radians

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .geometry import Plane, canonicalize

__all__ = [
    "CandidatePlane",
    "PlaneCluster",
    "ClusterConfig",
    "plane_distance",
    "cluster_planes",
]

# full pairwise matrix up to this many candidates; row-at-a-time beyond
_DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class CandidatePlane:
    """A single plane estimate with its evidence weight (e.g. inlier count)."""

    plane: Plane
    weight: float
    source_id: object = None

    def __post_init__(self):
        if not isinstance(self.plane, Plane):
            raise InvalidInputError("candidate plane must be a Plane")
        if not self.plane.is_canonical:
            raise InvalidInputError("candidate planes must be canonical")
        w = float(self.weight)
        if not w > 0.0:
            raise InvalidInputError(f"candidate weight must be positive, got {w}")
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True, eq=False)
class PlaneCluster:
    """A consolidated plane annotation and the candidates that support it."""

    center: Plane
    members: tuple
    support: float


@dataclass(frozen=True, eq=False)
class ClusterConfig:
    """DBSCAN hyperparameters.

    eps is dimensionless (the composite metric is already normalized by the
    two scales). min_points compares against summed candidate weight.
    offset_scale is in scene units; pipelines pass 2% of the scene diameter
    so eps carries across scenes of different size.
    """

    eps: float = 1.0
    min_points: int = 20
    angle_scale: float = radians(5.0)
    offset_scale: float = 1.0

    def __post_init__(self):
        if self.eps <= 0 or self.min_points < 1:
            raise InvalidInputError("eps must be > 0 and min_points >= 1")
        if self.angle_scale <= 0 or self.offset_scale <= 0:
            raise InvalidInputError("metric scales must be positive")


def plane_distance(
    a: Plane, b: Plane, angle_scale: float = 1.0, offset_scale: float = 1.0
) -> float:
    """Composite distance between two planes (see module docstring).

    Inputs are canonicalized first, so sign-equivalent parameterizations are
    at distance zero. Symmetric, non-negative, and obeys the triangle
    inequality on canonical representatives.
    """
    if angle_scale <= 0 or offset_scale <= 0:
        raise InvalidInputError("metric scales must be positive")
    ca = canonicalize(a)
    cb = canonicalize(b)
    dot = min(1.0, abs(float(ca.normal @ cb.normal)))
    return float(np.arccos(dot)) / angle_scale + abs(ca.offset - cb.offset) / offset_scale


def _distance_rows(normals, offsets, config):
    """Yield (i, row) of distances from candidate i to all candidates."""
    n = normals.shape[0]
    if n <= _DENSE_LIMIT:
        matrix = _kernels.plane_distance_matrix(
            normals, offsets, config.angle_scale, config.offset_scale
        )
        for i in range(n):
            yield i, matrix[i]
    else:
        for i in range(n):
            dot = np.abs(normals @ normals[i])
            np.clip(dot, 0.0, 1.0, out=dot)
            yield i, (
                np.arccos(dot) / config.angle_scale
                + np.abs(offsets - offsets[i]) / config.offset_scale
            )


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(values[order][min(k, len(values) - 1)])


def _cluster_center(members, normals, offsets, weights) -> Plane:
    scatter = (weights[:, None] * normals).T @ normals
    _, vecs = np.linalg.eigh(scatter)
    axis = vecs[:, -1]
    if float(weights @ (normals @ axis)) < 0.0:
        axis = -axis
    signs = np.where(normals @ axis < 0.0, -1.0, 1.0)
    offset = _weighted_median(signs * offsets, weights)
    return canonicalize(axis, offset)


def cluster_planes(candidates, config: ClusterConfig | None = None) -> list:
    """Group candidate planes with DBSCAN; returns clusters by falling support.

    Noise candidates (insufficient weighted density around them) are
    dropped. Each cluster's center normal is the principal direction of the
    weight-scaled normal scatter, its offset the weighted median of member
    offsets re-signed into the center's hemisphere; the center is canonical.
    Empty input yields an empty list.
    """
    if config is None:
        config = ClusterConfig()
    candidates = list(candidates)
    count = len(candidates)
    if count == 0:
        return []
    for c in candidates:
        if not isinstance(c, CandidatePlane):
            raise InvalidInputError("cluster_planes expects CandidatePlane items")
    normals = np.stack([c.plane.normal for c in candidates])
    offsets = np.array([c.plane.offset for c in candidates])
    weights = np.array([c.weight for c in candidates])

    neighbors = [None] * count
    core = np.zeros(count, dtype=bool)
    for i, row in _distance_rows(normals, offsets, config):
        idx = np.nonzero(row <= config.eps)[0]  # includes i itself
        neighbors[i] = idx
        core[i] = float(weights[idx].sum()) >= config.min_points

    labels = np.full(count, -1, dtype=np.int64)
    n_clusters = 0
    for seed in range(count):
        if labels[seed] != -1 or not core[seed]:
            continue
        label = n_clusters
        n_clusters += 1
        labels[seed] = label
        queue = deque([seed])
        while queue:
            j = queue.popleft()
            if not core[j]:
                continue  # border points join but do not expand
            for k in neighbors[j]:
                if labels[k] == -1:
                    labels[k] = label
                    queue.append(int(k))

    clusters = []
    for label in range(n_clusters):
        idx = np.nonzero(labels == label)[0]
        members = tuple(candidates[i] for i in idx)
        center = _cluster_center(members, normals[idx], offsets[idx], weights[idx])
        clusters.append(
            (float(weights[idx].sum()), int(idx[0]), PlaneCluster(center, members, float(weights[idx].sum())))
        )
    clusters.sort(key=lambda item: (-item[0], item[1]))
    return [cluster for _, _, cluster in clusters]
