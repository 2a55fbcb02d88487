"""Evaluation protocol for predicted symmetry planes.

Plane predictions are scored against ground truth along four axes:

* angular exactness / completeness / geodesic — mean nearest-neighbor
  angular errors, prediction-to-truth and truth-to-prediction;
* a visibility-aware F-score — predictions matched one-to-one to ground
  truth, where matches to planes that are *not visible* in the image are
  excluded from the false-positive count instead of rewarded or punished;
* a dense symmetry error — how far the predicted reflection map displaces
  actual scene points relative to the ground-truth reflection, normalized
  by the scene's extent ρ on either side of the true plane;
* the confidence-weighted matching cost used to pair predicted and target
  signed-distance maps.

Visibility itself is decided per image by :func:`visibility_filter`: a
plane counts as visible when, among the central crop's validly unprojected
pixels, at least 5% lie on each side of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    InvalidInputError,
    UndefinedMetricError,
)
from .clustering import plane_distance
from .geometry import (
    CameraModel,
    DepthMap,
    Plane,
    PointCloud,
    SignedDistanceMap,
    reflect_points,
    signed_distances,
    unproject_map,
)

__all__ = [
    "PlaneSet",
    "Assignment",
    "EvalReport",
    "normal_angle",
    "exactness",
    "completeness",
    "assign",
    "fscore",
    "dense_error",
    "dense_error_set",
    "visibility_filter",
    "matching_cost",
    "mean_matched_loss",
]

_DUPLICATE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PlaneSet:
    """An ordered set of distinct canonical planes.

    Two members closer than 1e-9 in the composite plane metric are
    considered the same plane and rejected at construction.
    """

    planes: tuple

    def __init__(self, planes):
        planes = tuple(planes)
        for p in planes:
            if not isinstance(p, Plane):
                raise InvalidInputError("PlaneSet expects Plane items")
            if not p.is_canonical:
                raise InvalidInputError("PlaneSet members must be canonical")
        for i in range(len(planes)):
            for j in range(i + 1, len(planes)):
                if _same_plane(planes[i], planes[j]):
                    raise InvalidInputError(
                        f"planes {i} and {j} are duplicates within {_DUPLICATE_TOLERANCE}"
                    )
        object.__setattr__(self, "planes", planes)

    def __len__(self):
        return len(self.planes)

    def __iter__(self):
        return iter(self.planes)

    def __getitem__(self, k):
        return self.planes[k]

    @property
    def normals(self) -> np.ndarray:
        if not self.planes:
            return np.zeros((0, 3))
        return np.stack([p.normal for p in self.planes])


@dataclass(frozen=True, eq=False)
class Assignment:
    """One-to-one matching between two index sets.

    pairs holds (row index, column index, cost) triples sorted by row;
    the unmatched tuples list the indices the matching could not cover
    (one side is always empty).
    """

    pairs: tuple
    unmatched_rows: tuple
    unmatched_cols: tuple


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Scores of one prediction set against one image's ground truth."""

    geodesic: float
    exactness: float
    completeness: float
    fscore_at: dict
    dense_error: float


def normal_angle(a, b) -> float:
    """Angle between two plane normals in degrees, ignoring orientation.

    arccos(min(1, |a.b|)): n and -n describe the same plane, so the result
    lives in [0, 90]. Inputs must be unit vectors.
    """
    va = np.asarray(a, dtype=np.float64).reshape(-1)
    vb = np.asarray(b, dtype=np.float64).reshape(-1)
    if va.shape != (3,) or vb.shape != (3,):
        raise InvalidInputError("normals must be 3-vectors")
    for v in (va, vb):
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-9:
            raise InvalidInputError(f"normal must be unit length, got norm {np.linalg.norm(v)!r}")
    return math.degrees(math.acos(min(1.0, abs(float(va @ vb)))))


def _angle_matrix(a: PlaneSet, b: PlaneSet) -> np.ndarray:
    dots = np.abs(a.normals @ b.normals.T)
    np.clip(dots, 0.0, 1.0, out=dots)
    return np.degrees(np.arccos(dots))


def exactness(pred: PlaneSet, gt_all: PlaneSet) -> float:
    """Mean over predictions of the nearest ground-truth normal angle."""
    if len(gt_all) == 0:
        raise InvalidInputError("exactness needs a non-empty ground-truth set")
    if len(pred) == 0:
        raise UndefinedMetricError("exactness is undefined for an empty prediction set")
    return float(_angle_matrix(pred, gt_all).min(axis=1).mean())


def completeness(pred: PlaneSet, gt_visible: PlaneSet) -> float:
    """Mean over visible ground truth of the nearest prediction angle.

    An empty prediction set scores the worst-case 90 degrees by convention.
    """
    if len(gt_visible) == 0:
        raise UndefinedMetricError("completeness is undefined without visible ground truth")
    if len(pred) == 0:
        return 90.0
    return float(_angle_matrix(gt_visible, pred).min(axis=1).mean())


def _hungarian(cost) -> list:
    """Minimum-cost assignment via shortest augmenting paths with potentials.

    Expects rows <= cols; costs may be negative. Returns (row, col) pairs.
    """
    n, m = cost.shape
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = 1-indexed row on column j, 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(0, m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    return sorted((match[j] - 1, j - 1) for j in range(1, m + 1) if match[j])


def assign(cost_matrix) -> Assignment:
    """Optimal one-to-one assignment covering min(rows, cols) pairs.

    Exact for any finite cost matrix (negative entries allowed); an empty
    matrix yields an empty assignment.
    """
    cost = np.asarray(cost_matrix, dtype=np.float64)
    if cost.ndim != 2:
        raise InvalidInputError(f"cost matrix must be 2-D, got shape {cost.shape}")
    rows, cols = cost.shape
    if rows == 0 or cols == 0:
        return Assignment((), tuple(range(rows)), tuple(range(cols)))
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix entries must be finite")
    if rows <= cols:
        pairs = _hungarian(cost)
    else:
        pairs = sorted((i, j) for j, i in _hungarian(cost.T))
    matched_rows = {i for i, _ in pairs}
    matched_cols = {j for _, j in pairs}
    return Assignment(
        tuple((i, j, float(cost[i, j])) for i, j in pairs),
        tuple(i for i in range(rows) if i not in matched_rows),
        tuple(j for j in range(cols) if j not in matched_cols),
    )


def _same_plane(a: Plane, b: Plane) -> bool:
    # Bitwise identity first: arccos amplifies 1-ulp dot products of
    # nearly-unit normals past the metric tolerance, so a plane compared
    # against its own copy must not fall through to plane_distance.
    if a is b or (np.array_equal(a.normal, b.normal) and a.offset == b.offset):
        return True
    return plane_distance(a, b) < _DUPLICATE_TOLERANCE


def _visible_indices(gt_all: PlaneSet, gt_visible: PlaneSet) -> set:
    indices = set()
    for k, vis in enumerate(gt_visible):
        hits = [j for j, p in enumerate(gt_all) if _same_plane(vis, p)]
        if not hits:
            raise InvalidInputError(
                f"visible plane {k} does not appear in the full ground-truth set"
            )
        indices.add(hits[0])
    return indices


def fscore(pred: PlaneSet, gt_all: PlaneSet, gt_visible: PlaneSet, threshold: float) -> float:
    """Visibility-aware F-score at an angular threshold (degrees).

    Predictions are matched one-to-one to the full ground-truth set by
    normal angle. A match within threshold counts as a true positive when
    its ground-truth plane is visible; when it is not visible the
    prediction is set aside entirely (neither tp nor fp: the plane is
    real, the image just cannot confirm it). Remaining predictions are
    false positives; unmatched visible planes are false negatives. With
    nothing to score on either side the score is 1.
    """
    if threshold <= 0:
        raise InvalidInputError(f"threshold must be positive, got {threshold}")
    visible = _visible_indices(gt_all, gt_visible)
    tp = 0
    nv = 0
    if len(pred) and len(gt_all):
        for i, j, angle in assign(_angle_matrix(pred, gt_all)).pairs:
            if angle < threshold:
                if j in visible:
                    tp += 1
                else:
                    nv += 1
    fp = len(pred) - tp - nv
    fn = len(gt_visible) - tp
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def dense_error(pred: Plane, gt: Plane, cloud: PointCloud) -> float:
    """Mean displacement between the two reflections over the cloud.

    (1/|P|) Σ ||reflect_pred(p) − reflect_gt(p)|| / ρ with ρ the maximum
    absolute distance of any cloud point to the ground-truth plane. The
    normalization makes the value scale-free; ρ = 0 (every point on the
    plane) leaves nothing to normalize by.
    """
    if len(cloud) == 0:
        raise InvalidInputError("dense_error needs a non-empty cloud")
    rho = float(np.abs(signed_distances(gt, cloud.points)).max())
    if rho <= 0.0:
        raise DegenerateConfigurationError("cloud lies entirely on the ground-truth plane")
    disp = reflect_points(pred, cloud.points) - reflect_points(gt, cloud.points)
    return float(np.linalg.norm(disp, axis=1).mean()) / rho


def dense_error_set(
    pred: PlaneSet, gt_all: PlaneSet, gt_visible: PlaneSet, cloud: PointCloud
) -> float:
    """Set-level dense error: average of its exactness and completeness halves.

    Exactness half: mean over predictions of the best (lowest) dense error
    against any ground-truth plane. Completeness half: mean over visible
    ground truth of the best dense error achieved by any prediction. The
    ground-truth plane always provides the ρ normalization.
    """
    if len(gt_all) == 0:
        raise InvalidInputError("dense_error_set needs a non-empty ground-truth set")
    if len(pred) == 0:
        raise UndefinedMetricError("dense_error_set is undefined for an empty prediction set")
    if len(gt_visible) == 0:
        raise UndefinedMetricError("dense_error_set needs at least one visible plane")
    table = np.array(
        [[dense_error(p, g, cloud) for g in gt_all] for p in pred]
    )
    exact = float(table.min(axis=1).mean())
    visible = sorted(_visible_indices(gt_all, gt_visible))
    complete = float(table[:, visible].min(axis=0).mean())
    return 0.5 * (exact + complete)


def visibility_filter(depth: DepthMap, camera: CameraModel, plane: Plane) -> bool:
    """Decide whether a plane is observable in one image.

    The depth map is cropped to its central 80% (a 10% margin on each side,
    rounded down), every valid pixel is unprojected, and the plane counts as
    visible when at least 1000 pixels survive and at least 5% of them fall
    on each side of the plane. Points exactly on the plane support neither
    side. Never raises: degenerate images are simply not visible.
    """
    mu = int(0.1 * depth.width)
    mv = int(0.1 * depth.height)
    window = depth.depth[mv : depth.height - mv, mu : depth.width - mu]
    n_valid = int(np.isfinite(window).sum())
    if n_valid < 1000:
        return False
    # unproject with original pixel coordinates, then restrict to the crop
    points = unproject_map(depth, camera)
    crop_mask = np.zeros_like(points.valid)
    crop_mask[mv : depth.height - mv, mu : depth.width - mu] = True
    s = signed_distances(plane, points.points[points.valid & crop_mask])
    prop_pos = float((s > 0).sum()) / n_valid
    prop_neg = float((s < 0).sum()) / n_valid
    return not (prop_pos < 0.05 or prop_neg < 0.05)


def matching_cost(pred_sdf: SignedDistanceMap, gt_sdf: SignedDistanceMap, alpha: float) -> float:
    """Confidence-weighted L1 cost between two signed-distance maps.

    Σ c_k |ŝ_k − s_k| − α Σ log c_k over jointly valid pixels; the log
    barrier rewards confident predictions only when they are also accurate.
    The prediction must carry positive confidence values.
    """
    if pred_sdf.values.shape != gt_sdf.values.shape:
        raise InvalidInputError(
            f"signed-distance maps must share dimensions, got "
            f"{pred_sdf.values.shape} and {gt_sdf.values.shape}"
        )
    if pred_sdf.confidence is None:
        raise InvalidInputError("matching cost requires prediction confidence")
    joint = pred_sdf.valid & gt_sdf.valid
    c = pred_sdf.confidence[joint]
    if c.size and float(c.min()) <= 0.0:
        raise InvalidInputError("confidence values must be positive")
    diff = np.abs(pred_sdf.values[joint] - gt_sdf.values[joint])
    return float(c @ diff - alpha * np.log(c).sum())


def mean_matched_loss(costs, assignment: Assignment) -> float:
    """Mean of the cost-matrix entries selected by an assignment."""
    if not assignment.pairs:
        raise UndefinedMetricError("mean matched loss is undefined for an empty matching")
    cost = np.asarray(costs, dtype=np.float64)
    total = 0.0
    for i, j, _ in assignment.pairs:
        if not (0 <= i < cost.shape[0] and 0 <= j < cost.shape[1]):
            raise InvalidInputError(f"assignment pair ({i}, {j}) outside matrix {cost.shape}")
        total += float(cost[i, j])
    return total / len(assignment.pairs)
