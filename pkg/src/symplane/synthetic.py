"""Procedurally generated scenes with known reflection symmetries.

Construction, in the object's local frame:

* the k mirror planes all contain the local z-axis, with in-plane normal
  angles i*pi/k; together they generate a dihedral group of order 2k
  (k rotations about z and k reflections),
* a batch of random surface samples is replicated through the whole group,
  so every declared plane maps the point set to itself by construction,
* the assembly lands in the world through a random rotation and translation;
  the yaw is nudged until every world normal keeps a clear gap between its
  two largest |components|, which keeps canonical orientations stable under
  the small perturbations later fits introduce,
* ring cameras around the object render the base depth images; every other
  view is derived through a group element, making each reflected view an
  exact column flip of its partner. Matched pixels in such a pair carry
  bitwise-identical depth values, so cross-view matches stay exact mirrors
  even after float32 serialization,
* finally every camera's valid pixels are unprojected and appended to the
  cloud, so unprojecting any stored depth map lands exactly on stored points.

Scene-level noise and outliers, when requested, corrupt only the stored
cloud; depth images always show the ideal symmetric surface. Noise on
individual matches comes from ``sample_correspondences`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import zbuffer_splat
from .errors import DegenerateConfigurationError, InvalidInputError
from .fitting import PointPairSet
from .geometry import (
    CameraModel,
    DepthMap,
    Plane,
    PointCloud,
    canonicalize,
    project_points,
    reflect_points,
    unproject_map,
)
from .io import CorrespondenceRecord

__all__ = [
    "SHAPES",
    "SceneSpec",
    "GroundTruthScene",
    "generate_scene",
    "sample_correspondences",
    "pixel_match_records",
]

SHAPES = ("box-facade", "cross-plan", "octagon-tower")

_ALLOWED_SYMMETRY = {
    "box-facade": (1, 2),
    "cross-plan": (1, 2, 4),
    "octagon-tower": (1, 2, 4, 8),
}

# dominant-|component| gap every world normal must keep; fitted normals that
# wander less than ~0.5 degrees then canonicalize the same way as the truth
_SEAM_MARGIN = 0.03

_WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene. Identical specs (same seed) always
    reproduce bit-identical scenes."""

    shape: str
    symmetry_count: int
    diameter: float = 2.0
    noise_sigma: float = 0.0
    outlier_fraction: float = 0.0
    seed: int = 0
    camera_count: int = 4
    resolution: tuple = (160, 120)
    base_point_count: int = 8000

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidInputError(f"unknown shape {self.shape!r}, expected one of {SHAPES}")
        if self.symmetry_count not in _ALLOWED_SYMMETRY[self.shape]:
            raise InvalidInputError(
                f"{self.shape} supports symmetry counts {_ALLOWED_SYMMETRY[self.shape]}, "
                f"got {self.symmetry_count}"
            )
        if not (math.isfinite(self.diameter) and self.diameter > 0.0):
            raise InvalidInputError(f"diameter must be positive, got {self.diameter}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise InvalidInputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not (0.0 <= self.outlier_fraction < 1.0):
            raise InvalidInputError(
                f"outlier_fraction must lie in [0, 1), got {self.outlier_fraction}"
            )
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidInputError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        if int(self.camera_count) != self.camera_count or self.camera_count < 1:
            raise InvalidInputError(f"camera_count must be >= 1, got {self.camera_count}")
        object.__setattr__(self, "camera_count", int(self.camera_count))
        res = tuple(int(v) for v in self.resolution)
        if len(res) != 2 or res != tuple(self.resolution) or min(res) < 16:
            raise InvalidInputError(
                f"resolution must be two integers >= 16 (width, height), got {self.resolution}"
            )
        object.__setattr__(self, "resolution", res)
        if int(self.base_point_count) != self.base_point_count or self.base_point_count < 16:
            raise InvalidInputError(
                f"base_point_count must be an integer >= 16, got {self.base_point_count}"
            )
        object.__setattr__(self, "base_point_count", int(self.base_point_count))


@dataclass(frozen=True)
class GroundTruthScene:
    """A generated scene: annotated planes, point cloud, cameras and depths.

    ``camera_mirror[r, i]`` is the index of the camera whose image is the
    horizontal mirror of image i across ground-truth plane r; the two depth
    grids are exact column-reversals of each other.
    """

    spec: SceneSpec
    planes: tuple
    cloud: PointCloud
    cameras: tuple
    depths: tuple
    diameter: float
    camera_mirror: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.camera_mirror, dtype=np.int64)
        m.flags.writeable = False
        object.__setattr__(self, "camera_mirror", m)


# ---------------------------------------------------------------------------
# the dihedral symmetry group

def _group_matrices(k: int) -> np.ndarray:
    """The 2k orthogonal matrices generated by the k mirror planes: entry
    j < k is the rotation by 2*pi*j/k about z, entry k + i the reflection
    whose in-plane normal sits at angle i*pi/k."""
    mats = np.zeros((2 * k, 3, 3))
    for j in range(k):
        a = 2.0 * math.pi * j / k
        c, s = math.cos(a), math.sin(a)
        mats[j] = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    for i in range(k):
        n = _plane_normal_local(k, i)
        mats[k + i] = np.eye(3) - 2.0 * np.outer(n, n)
    mats[0] = np.eye(3)
    return mats


def _plane_normal_local(k: int, i: int) -> np.ndarray:
    t = math.pi * i / k
    return np.array([math.cos(t), math.sin(t), 0.0])


def _compose(k: int, a: int, b: int) -> int:
    """Index of element a*b. Rotations compose by angle addition; a rotation
    followed by a reflection (and vice versa) shifts the mirror index; two
    reflections compose to the rotation through twice their opening angle."""
    if a < k and b < k:
        return (a + b) % k
    if a < k:
        return k + (b - k + a) % k
    if b < k:
        return k + (a - k - b) % k
    return (a - b) % k


# ---------------------------------------------------------------------------
# surface samplers (local frame, unit-ish proportions)

def _box_surface(rng, m, half):
    areas = np.array([half[1] * half[2], half[0] * half[2], half[0] * half[1]])
    probs = np.repeat(areas / areas.sum() / 2.0, 2)
    face = rng.choice(6, size=m, p=probs)
    uv = rng.uniform(-1.0, 1.0, size=(m, 2))
    pts = np.empty((m, 3))
    for f in range(6):
        axis, sign = divmod(f, 2)
        sel = face == f
        others = [a for a in range(3) if a != axis]
        pts[sel, axis] = (1.0 if sign == 0 else -1.0) * half[axis]
        pts[sel, others[0]] = uv[sel, 0] * half[others[0]]
        pts[sel, others[1]] = uv[sel, 1] * half[others[1]]
    return pts


def _sample_box(rng, n):
    # distinct extents: the declared mirrors are the only symmetries the
    # sampled point set can keep
    half = np.array([0.50, 0.35, 0.22])
    return _box_surface(rng, n, half), 2.0 * float(np.linalg.norm(half))


def _sample_cross(rng, n):
    arm, width, height = 0.45, 0.15, 0.40
    e1 = np.array([arm, width, height / 2.0])
    e2 = np.array([width, arm, height / 2.0])
    out = []
    kept = 0
    while kept < n:
        m = max(64, int((n - kept) * 1.8))
        pick = rng.random(m) < 0.5  # equal arms, equal areas
        pts = np.empty((m, 3))
        pts[pick] = _box_surface(rng, int(pick.sum()), e1)
        pts[~pick] = _box_surface(rng, int((~pick).sum()), e2)
        other = np.where(pick[:, None], e2[None, :], e1[None, :])
        inside = np.all(np.abs(pts) < other, axis=1)  # strict: shared walls stay
        pts = pts[~inside]
        out.append(pts)
        kept += pts.shape[0]
    pts = np.concatenate(out)[:n]
    diam = math.sqrt(4.0 * arm * arm + 4.0 * width * width + height * height)
    return pts, diam


def _sample_octagon(rng, n):
    radius, height = 0.40, 0.60
    verts = np.stack(
        [
            radius * np.cos(np.arange(9) * (math.pi / 4.0)),
            radius * np.sin(np.arange(9) * (math.pi / 4.0)),
        ],
        axis=1,
    )
    edge = 2.0 * radius * math.sin(math.pi / 8.0)
    apothem = radius * math.cos(math.pi / 8.0)
    side_area = 8.0 * edge * height
    cap_area = 2.0 * 2.0 * math.sqrt(2.0) * radius * radius
    p_side = side_area / (side_area + cap_area)
    ons = rng.random(n) < p_side
    pts = np.empty((n, 3))
    m = int(ons.sum())
    if m:
        face = rng.integers(0, 8, size=m)
        t = rng.random(m)
        a = verts[face]
        b = verts[face + 1]
        pts[ons, 0] = a[:, 0] + t * (b[:, 0] - a[:, 0])
        pts[ons, 1] = a[:, 1] + t * (b[:, 1] - a[:, 1])
        pts[ons, 2] = rng.uniform(-height / 2.0, height / 2.0, size=m)
    m = n - m
    if m:
        # rejection-sample the octagonal caps from their bounding square
        normals = np.arange(8) * (math.pi / 4.0) + math.pi / 8.0
        cn = np.cos(normals)
        sn = np.sin(normals)
        acc = []
        need = m
        while need > 0:
            cand = rng.uniform(-radius, radius, size=(max(64, need * 2), 2))
            ok = (cand @ np.stack([cn, sn])).max(axis=1) <= apothem
            acc.append(cand[ok])
            need = m - sum(a.shape[0] for a in acc)
        xy = np.concatenate(acc)[:m]
        caps = np.where(rng.random(m) < 0.5, height / 2.0, -height / 2.0)
        pts[~ons, 0] = xy[:, 0]
        pts[~ons, 1] = xy[:, 1]
        pts[~ons, 2] = caps
    return pts, math.sqrt(4.0 * radius * radius + height * height)


_SAMPLERS = {
    "box-facade": _sample_box,
    "cross-plan": _sample_cross,
    "octagon-tower": _sample_octagon,
}


# ---------------------------------------------------------------------------
# placement and cameras

def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _seam_clear(normals):
    comp = np.sort(np.abs(normals), axis=1)
    return bool(np.all(comp[:, 2] - comp[:, 1] >= _SEAM_MARGIN))


def _placement(rng, k, diameter):
    """Random pose whose yaw is nudged until no world normal sits near a
    canonical-orientation tie."""
    tilt = rng.uniform(-0.15, 0.15, size=2)
    yaw0 = rng.uniform(0.0, 2.0 * math.pi)
    base = _rot_x(tilt[0]) @ _rot_y(tilt[1])
    locals_ = np.stack([_plane_normal_local(k, i) for i in range(k)])
    rotation = None
    for j in range(256):
        yaw = yaw0 + j * (math.pi / (4.0 * k) + 0.0137)
        cand = base @ _rot_z(yaw)
        if _seam_clear(locals_ @ cand.T):
            rotation = cand
            break
    if rotation is None:
        raise DegenerateConfigurationError("no seam-free placement found")
    center = rng.uniform(-0.35, 0.35, size=3) * diameter
    return rotation, center


def _look_at(position, target):
    forward = target - position
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, _WORLD_UP)
    nr = np.linalg.norm(right)
    if nr < 1e-9:
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / nr
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward])
    return rotation, -rotation @ position


def _render(points, camera, width, height):
    u, v, z = project_points(camera, points)
    front = z > 1e-9
    ui = np.zeros(u.shape, dtype=np.int64)
    vi = np.zeros(v.shape, dtype=np.int64)
    ui[front] = np.rint(u[front]).astype(np.int64)
    vi[front] = np.rint(v[front]).astype(np.int64)
    ok = front & (ui >= 0) & (ui < width) & (vi >= 0) & (vi < height)
    depth, _ = zbuffer_splat(ui[ok], vi[ok], z[ok], height, width)
    # quantize to float32 now so the on-disk container reproduces these
    # exact values and unprojection agrees before and after serialization
    return DepthMap(depth.astype(np.float32).astype(np.float64))


# ---------------------------------------------------------------------------
# scene assembly

def generate_scene(spec: SceneSpec) -> GroundTruthScene:
    """Build the scene a spec describes; same spec, same bits out."""
    if not isinstance(spec, SceneSpec):
        raise InvalidInputError("generate_scene expects a SceneSpec")
    rng = np.random.Generator(np.random.Philox(spec.seed))
    k = spec.symmetry_count
    width, height = spec.resolution

    pts_local, unit_diameter = _SAMPLERS[spec.shape](rng, spec.base_point_count)
    pts_local = pts_local * (spec.diameter / unit_diameter)

    group = _group_matrices(k)
    orbit = np.einsum("gij,nj->gni", group, pts_local).reshape(-1, 3)

    rotation, center = _placement(rng, k, spec.diameter)
    cloud_pts = orbit @ rotation.T + center

    planes = []
    for i in range(k):
        n_world = rotation @ _plane_normal_local(k, i)
        planes.append(canonicalize(n_world, -float(n_world @ center)))

    # world-frame group action: x -> A x + b
    affine_a = np.einsum("ij,gjk,lk->gil", rotation, group, rotation)
    affine_a[0] = np.eye(3)
    affine_b = center - affine_a @ center
    affine_b[0] = 0.0

    flip = np.diag([-1.0, 1.0, 1.0])
    ring_radius = 1.8 * spec.diameter
    ring_height = 0.3 * spec.diameter
    focal = float(width)
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0

    cameras = []
    depths = []
    for b in range(spec.camera_count):
        azimuth = 2.0 * math.pi * b / spec.camera_count + 0.37
        position = center + np.array(
            [
                ring_radius * math.cos(azimuth),
                ring_radius * math.sin(azimuth),
                ring_height * (1.0 if b % 2 == 0 else -1.0),
            ]
        )
        rot_b, t_b = _look_at(position, center)
        base_cam = CameraModel(focal, focal, cx, cy, rot_b, t_b)
        base_depth = _render(cloud_pts, base_cam, width, height)
        for g in range(2 * k):
            if g == 0:
                cameras.append(base_cam)
                depths.append(base_depth)
                continue
            rot_g = rot_b @ affine_a[g].T
            t_g = t_b - rot_g @ affine_b[g]
            if g < k:  # rotation: same image, new viewpoint
                cameras.append(CameraModel(focal, focal, cx, cy, rot_g, t_g))
                depths.append(DepthMap(base_depth.depth))
            else:  # reflection: the mirrored view is a column flip
                cameras.append(CameraModel(focal, focal, cx, cy, flip @ rot_g, flip @ t_g))
                depths.append(DepthMap(base_depth.depth[:, ::-1].copy()))

    snapped = [cloud_pts]
    for cam, depth in zip(cameras, depths):
        snapped.append(unproject_map(depth, cam).valid_points())
    cloud_pts = np.concatenate(snapped)

    if spec.noise_sigma > 0.0:
        cloud_pts = cloud_pts + rng.normal(
            0.0, spec.noise_sigma * spec.diameter, size=cloud_pts.shape
        )
    n_outliers = int(spec.outlier_fraction * cloud_pts.shape[0])
    if n_outliers:
        sel = rng.choice(cloud_pts.shape[0], size=n_outliers, replace=False)
        lo = cloud_pts.min(axis=0)
        hi = cloud_pts.max(axis=0)
        cloud_pts[sel] = rng.uniform(lo, hi, size=(n_outliers, 3))

    n_cams = len(cameras)
    mirror = np.empty((k, n_cams), dtype=np.int64)
    for r in range(k):
        for idx in range(n_cams):
            b, g = divmod(idx, 2 * k)
            mirror[r, idx] = b * 2 * k + _compose(k, k + r, g)

    return GroundTruthScene(
        spec=spec,
        planes=tuple(planes),
        cloud=PointCloud(cloud_pts),
        cameras=tuple(cameras),
        depths=tuple(depths),
        diameter=spec.diameter,
        camera_mirror=mirror,
    )


# ---------------------------------------------------------------------------
# correspondence synthesis

def sample_correspondences(
    scene: GroundTruthScene,
    plane_index: int,
    count: int,
    noise_sigma: float = 0.0,
    outlier_fraction: float = 0.0,
    seed=0,
) -> PointPairSet:
    """Draw point pairs related by one ground-truth plane.

    Pairs are (p, reflection of p) for cloud points p, each endpoint then
    perturbed by Gaussian noise of ``noise_sigma * scene.diameter``; a
    ``outlier_fraction`` share of the pairs is replaced by unrelated points
    drawn uniformly from the cloud's bounding box. ``outlier_fraction`` may
    be 1.0 here: the result is then all-outlier and downstream fits are
    expected to reject it or report a tiny inlier count.
    """
    if not isinstance(scene, GroundTruthScene):
        raise InvalidInputError("sample_correspondences expects a GroundTruthScene")
    if not 0 <= plane_index < len(scene.planes):
        raise InvalidInputError(
            f"plane_index {plane_index} outside 0..{len(scene.planes) - 1}"
        )
    if int(count) != count or count < 3:
        raise InvalidInputError(f"at least 3 pairs required, got {count}")
    count = int(count)
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0.0):
        raise InvalidInputError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if not (0.0 <= outlier_fraction <= 1.0):
        raise InvalidInputError(
            f"outlier_fraction must lie in [0, 1], got {outlier_fraction}"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    pts = scene.cloud.points
    idx = rng.integers(0, pts.shape[0], size=count)
    first = pts[idx].copy()
    second = reflect_points(scene.planes[plane_index], first)
    if noise_sigma > 0.0:
        scale = noise_sigma * scene.diameter
        first = first + rng.normal(0.0, scale, size=first.shape)
        second = second + rng.normal(0.0, scale, size=second.shape)
    n_outliers = int(outlier_fraction * count)
    if n_outliers:
        sel = rng.choice(count, size=n_outliers, replace=False)
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        first[sel] = rng.uniform(lo, hi, size=(n_outliers, 3))
        second[sel] = rng.uniform(lo, hi, size=(n_outliers, 3))
    return PointPairSet(first, second)


def pixel_match_records(
    scene: GroundTruthScene,
    plane_index: int,
    max_matches_per_record: int | None = 500,
    max_records: int | None = None,
    seed: int = 0,
):
    """Exact cross-view matches for one ground-truth plane.

    For every camera pair related by the plane's reflection, each valid pixel
    (u, v) of the first image matches pixel (u, v) of the horizontally
    flipped second image, and both carry bitwise-identical depths, so
    unprojections form exact mirror pairs. Match lists and camera pairs are
    subsampled deterministically when caps are given.
    """
    if not isinstance(scene, GroundTruthScene):
        raise InvalidInputError("pixel_match_records expects a GroundTruthScene")
    if not 0 <= plane_index < len(scene.planes):
        raise InvalidInputError(
            f"plane_index {plane_index} outside 0..{len(scene.planes) - 1}"
        )
    rng = np.random.Generator(np.random.Philox([int(seed), int(plane_index)]))
    row = scene.camera_mirror[plane_index]
    pairs = [(i, int(row[i])) for i in range(row.shape[0]) if int(row[i]) > i]
    if max_records is not None and 0 < max_records < len(pairs):
        keep = np.sort(rng.choice(len(pairs), size=max_records, replace=False))
        pairs = [pairs[int(t)] for t in keep]
    records = []
    for image_a, image_b in pairs:
        vs, us = np.nonzero(np.isfinite(scene.depths[image_a].depth))
        if vs.size == 0:
            continue
        if max_matches_per_record is not None and 0 < max_matches_per_record < vs.size:
            keep = np.sort(rng.choice(vs.size, size=max_matches_per_record, replace=False))
            vs = vs[keep]
            us = us[keep]
        matches = np.stack([us, vs, us, vs], axis=1).astype(np.int64)
        records.append(
            CorrespondenceRecord(
                image_a=image_a, image_b=image_b, flipped_b=True, matches=matches
            )
        )
    return records
