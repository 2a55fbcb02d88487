"""End-to-end flows over scene bundles.

A scene bundle is a directory holding cameras, depth maps, pixel
correspondences, and optionally a point cloud and annotated planes:

    cameras.jsonl            one camera per line, world-to-camera
    depths/000.symd, ...     one depth map per camera, same order
    correspondences.jsonl    pixel matches between images
    cloud.ply                scene points (optional)
    planes_gt.jsonl          annotated mirror planes (optional)

``annotate_scene`` turns correspondence records into clustered mirror
planes: each record is unprojected through its two depth maps, a robust
pair fit produces one candidate plane weighted by its inlier count, and the
candidates are clustered. Per-record randomness is keyed by (seed, record
index), so results do not depend on thread scheduling, and failed records
are logged and skipped rather than aborting the scene.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import CandidatePlane, ClusterConfig, cluster_planes
from .errors import (
    DegenerateConfigurationError,
    InsufficientDataError,
    InvalidBundleError,
    InvalidInputError,
    OutOfBoundsError,
)
from .fitting import FitConfig, PointPairSet, SdfSampleSet, fit_plane_from_sdf, fit_reflection_plane
from .geometry import (
    Plane,
    PointCloud,
    PointMap,
    cloud_diameter,
    reflect_points,
    unproject_map,
)
from .io import (
    CorrespondenceRecord,
    read_cameras,
    read_cloud_ply,
    read_correspondences,
    read_depth,
    read_planes,
    write_cameras,
    write_cloud_ply,
    write_correspondences,
    write_depth,
    write_planes,
)
from .metrics import EvalReport, PlaneSet, assign, dense_error_set, exactness, completeness, fscore, visibility_filter, _angle_matrix

__all__ = [
    "SceneBundle",
    "AnnotateConfig",
    "unflip",
    "load_bundle",
    "write_scene_bundle",
    "bundle_from_scene",
    "annotate_scene",
    "planes_from_prediction",
    "complete_cloud",
    "evaluate_scene",
]

log = logging.getLogger("symplane.pipeline")


@dataclass(frozen=True)
class SceneBundle:
    """In-memory view of a scene bundle directory."""

    cameras: tuple = ()
    depths: tuple = ()
    records: tuple = ()
    cloud: PointCloud | None = None
    gt_planes: tuple = ()
    gt_supports: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(self, "depths", tuple(self.depths))
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "gt_planes", tuple(self.gt_planes))
        if len(self.cameras) != len(self.depths):
            raise InvalidBundleError(
                f"{len(self.cameras)} cameras but {len(self.depths)} depth maps"
            )


@dataclass(frozen=True)
class AnnotateConfig:
    """Knobs for ``annotate_scene``. ``offset_scale`` left unset resolves to
    2% of the scene diameter at run time."""

    seed: int = 0
    ransac_iterations: int = 256
    inlier_threshold: float | None = None
    max_iterations: int = 50
    eps: float = 1.0
    min_points: float = 20.0
    angle_scale: float = math.radians(5.0)
    offset_scale: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.threads < 1:
            raise InvalidInputError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def from_mapping(cls, mapping) -> "AnnotateConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(mapping) - known
        if unknown:
            raise InvalidInputError(f"unknown annotate options: {sorted(unknown)}")
        return cls(**mapping)


def unflip(u: int, width: int) -> int:
    """Undo horizontal mirroring of a pixel column; its own inverse."""
    if int(width) != width or width <= 0:
        raise InvalidInputError(f"width must be a positive integer, got {width}")
    if int(u) != u:
        raise InvalidInputError(f"pixel column must be an integer, got {u}")
    u = int(u)
    width = int(width)
    if not 0 <= u < width:
        raise OutOfBoundsError(f"column {u} outside image of width {width}")
    return width - 1 - u


# ---------------------------------------------------------------------------
# bundle I/O


def _depth_name(index: int, total: int) -> str:
    pad = max(3, len(str(max(total - 1, 0))))
    return f"{index:0{pad}d}.symd"


def write_scene_bundle(directory, scene, records=()) -> Path:
    """Write a generated scene plus its correspondence records as a bundle."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    write_cameras(root / "cameras.jsonl", scene.cameras)
    depth_dir = root / "depths"
    depth_dir.mkdir(exist_ok=True)
    total = len(scene.depths)
    for i, depth in enumerate(scene.depths):
        write_depth(depth_dir / _depth_name(i, total), depth)
    write_cloud_ply(root / "cloud.ply", scene.cloud.points)
    write_planes(root / "planes_gt.jsonl", scene.planes)
    write_correspondences(root / "correspondences.jsonl", records)
    return root


def bundle_from_scene(scene, records=()) -> SceneBundle:
    """Wrap a generated scene as an in-memory bundle."""
    return SceneBundle(
        cameras=scene.cameras,
        depths=scene.depths,
        records=tuple(records),
        cloud=scene.cloud,
        gt_planes=scene.planes,
    )


def load_bundle(directory) -> SceneBundle:
    root = Path(directory)
    if not root.is_dir():
        raise InvalidBundleError(f"{root} is not a directory")
    cameras = ()
    if (root / "cameras.jsonl").exists():
        cameras = tuple(read_cameras(root / "cameras.jsonl"))
    depths = ()
    depth_dir = root / "depths"
    if depth_dir.is_dir():
        files = sorted(depth_dir.glob("*.symd"))
        depths = tuple(read_depth(f) for f in files)
    records = ()
    if (root / "correspondences.jsonl").exists():
        records = tuple(read_correspondences(root / "correspondences.jsonl"))
    cloud = None
    if (root / "cloud.ply").exists():
        points, _ = read_cloud_ply(root / "cloud.ply")
        cloud = PointCloud(points)
    gt_planes = ()
    gt_supports = None
    if (root / "planes_gt.jsonl").exists():
        planes, supports = read_planes(root / "planes_gt.jsonl")
        gt_planes = tuple(planes)
        gt_supports = supports
    return SceneBundle(
        cameras=cameras,
        depths=depths,
        records=records,
        cloud=cloud,
        gt_planes=gt_planes,
        gt_supports=gt_supports,
    )


# ---------------------------------------------------------------------------
# annotation


def _record_pairs(bundle: SceneBundle, record: CorrespondenceRecord, point_maps: dict):
    """Unproject one record's matches; invalid-depth matches drop out."""
    n_images = len(bundle.depths)
    if not (0 <= record.image_a < n_images and 0 <= record.image_b < n_images):
        raise InvalidBundleError(
            f"record references images ({record.image_a}, {record.image_b}) "
            f"but the bundle holds {n_images}"
        )
    map_a = point_maps[record.image_a]
    map_b = point_maps[record.image_b]
    u_a, v_a, u_b, v_b = record.matches.T
    if record.flipped_b:
        width_b = bundle.depths[record.image_b].width
        if np.any(u_b < 0) or np.any(u_b >= width_b):
            raise OutOfBoundsError("flipped match column outside image")
        u_b = width_b - 1 - u_b
    for u, v, pm, side in ((u_a, v_a, map_a, "a"), (u_b, v_b, map_b, "b")):
        if np.any(u < 0) or np.any(u >= pm.width) or np.any(v < 0) or np.any(v >= pm.height):
            raise OutOfBoundsError(f"match pixel outside image {side}")
    keep = map_a.valid[v_a, u_a] & map_b.valid[v_b, u_b]
    return map_a.points[v_a[keep], u_a[keep]], map_b.points[v_b[keep], u_b[keep]]


def annotate_scene(bundle: SceneBundle, config: AnnotateConfig | None = None):
    """Detect mirror planes from a bundle's correspondence records.

    Returns the plane clusters sorted by descending support. Records that
    cannot produce a candidate (bad pixels, not enough valid depth, fit
    rejected) are logged and skipped; if none survive the scene is reported
    as insufficient.
    """
    if config is None:
        config = AnnotateConfig()
    if isinstance(config, dict):
        config = AnnotateConfig.from_mapping(config)
    if not bundle.records:
        raise InsufficientDataError("bundle holds no correspondence records")
    needed = sorted(
        {r.image_a for r in bundle.records} | {r.image_b for r in bundle.records}
    )
    n_images = len(bundle.depths)
    bad = [i for i in needed if not 0 <= i < n_images]
    if bad:
        raise InvalidBundleError(f"records reference missing images {bad}")
    point_maps = {
        i: unproject_map(bundle.depths[i], bundle.cameras[i]) for i in needed
    }

    pair_sets: list[PointPairSet | None] = []
    for ridx, record in enumerate(bundle.records):
        try:
            first, second = _record_pairs(bundle, record, point_maps)
        except (InvalidInputError, OutOfBoundsError) as exc:
            log.warning("record %d skipped: %s", ridx, exc)
            pair_sets.append(None)
            continue
        if first.shape[0] < 3:
            log.warning(
                "record %d skipped: only %d matches have valid depth", ridx, first.shape[0]
            )
            pair_sets.append(None)
            continue
        pair_sets.append(PointPairSet(first, second))

    def _fit(ridx_pairs):
        ridx, pairs = ridx_pairs
        if pairs is None:
            return None
        fit_config = FitConfig(
            max_iterations=config.max_iterations,
            ransac=True,
            ransac_iterations=config.ransac_iterations,
            inlier_threshold=config.inlier_threshold,
            rng=np.random.Generator(np.random.Philox([int(config.seed), ridx])),
        )
        try:
            return fit_reflection_plane(pairs, fit_config)
        except (InsufficientDataError, DegenerateConfigurationError) as exc:
            log.warning("record %d skipped: %s", ridx, exc)
            return None

    jobs = list(enumerate(pair_sets))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            reports = list(pool.map(_fit, jobs))  # map preserves input order
    else:
        reports = [_fit(job) for job in jobs]

    candidates = [
        CandidatePlane(report.plane, weight=float(report.inlier_count), source_id=ridx)
        for ridx, report in enumerate(reports)
        if report is not None and report.inlier_count >= 3
    ]
    if not candidates:
        raise InsufficientDataError("no correspondence record produced a usable plane")

    offset_scale = config.offset_scale
    if offset_scale is None:
        if bundle.cloud is not None:
            diameter = cloud_diameter(bundle.cloud)
        else:
            pooled = np.concatenate(
                [np.concatenate([p.first, p.second]) for p in pair_sets if p is not None]
            )
            diameter = cloud_diameter(pooled)
        if diameter <= 0.0:
            raise DegenerateConfigurationError("scene has no spatial extent")
        offset_scale = 0.02 * diameter

    cluster_config = ClusterConfig(
        eps=config.eps,
        min_points=config.min_points,
        angle_scale=config.angle_scale,
        offset_scale=offset_scale,
    )
    return cluster_planes(candidates, cluster_config)


# ---------------------------------------------------------------------------
# dense predictions


def planes_from_prediction(
    point_map: PointMap,
    sdf_maps,
    logits,
    logit_threshold: float = 0.0,
    confidence_quantile: float = 0.5,
):
    """Fit one plane per accepted signed-distance instance.

    Instances with a logit below the threshold are dropped. For the rest,
    pixels must be valid in both grids and carry confidence at or above the
    instance's own ``confidence_quantile`` level; instances left with fewer
    than 4 pixels are skipped with a warning. Returns a list of FitReport,
    possibly empty.
    """
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    sdf_maps = list(sdf_maps)
    if logits.shape[0] != len(sdf_maps):
        raise InvalidInputError(
            f"{len(sdf_maps)} sdf instances but {logits.shape[0]} logits"
        )
    if not 0.0 <= confidence_quantile <= 1.0:
        raise InvalidInputError(
            f"confidence_quantile must lie in [0, 1], got {confidence_quantile}"
        )
    reports = []
    for inst, (sdf, logit) in enumerate(zip(sdf_maps, logits)):
        if sdf.values.shape != (point_map.height, point_map.width):
            raise InvalidInputError(
                f"sdf instance {inst} shape {sdf.values.shape} does not match points"
            )
        if logit < logit_threshold:
            continue
        if sdf.confidence is None:
            raise InvalidInputError(f"sdf instance {inst} carries no confidence")
        joint = point_map.valid & sdf.valid
        count = int(joint.sum())
        if count == 0:
            log.warning("sdf instance %d skipped: no jointly valid pixels", inst)
            continue
        level = np.quantile(sdf.confidence[joint], confidence_quantile)
        sel = joint & (sdf.confidence >= level)
        if int(sel.sum()) < 4:
            log.warning(
                "sdf instance %d skipped: %d pixels after confidence cut", inst, int(sel.sum())
            )
            continue
        samples = SdfSampleSet(
            point_map.points[sel], sdf.values[sel], weights=sdf.confidence[sel]
        )
        reports.append(fit_plane_from_sdf(samples))
    return reports


# ---------------------------------------------------------------------------
# completion


def complete_cloud(points, planes, depth: int = 2) -> PointCloud:
    """Mirror a partial cloud across its planes, then across compositions.

    ``depth`` bounds the number of chained reflections (2 covers the
    rotations two mirrors generate). Points closer than 1e-9 merge, keeping
    the earliest occurrence, so the input points always survive verbatim.
    """
    if isinstance(points, PointMap):
        pts = points.valid_points()
    elif isinstance(points, PointCloud):
        pts = points.points
    else:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidInputError(f"points must be (n, 3), got {pts.shape}")
    planes = list(planes)
    if not planes:
        raise InvalidInputError("at least one mirror plane required")
    for p in planes:
        if not isinstance(p, Plane):
            raise InvalidInputError("complete_cloud expects Plane mirrors")
    if int(depth) != depth or depth < 1:
        raise InvalidInputError(f"depth must be a positive integer, got {depth}")

    batches = [pts]
    frontier = [pts]
    for _ in range(int(depth)):
        frontier = [reflect_points(p, arr) for p in planes for arr in frontier]
        batches.extend(frontier)
    merged = np.concatenate(batches)
    keys = np.round(merged * 1e9).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return PointCloud(merged[np.sort(first)])


# ---------------------------------------------------------------------------
# evaluation


def evaluate_scene(
    bundle: SceneBundle,
    planes,
    thresholds=(1.0, 5.0, 15.0),
):
    """Score predicted planes against a bundle's annotated ground truth.

    Returns (per-image EvalReports, machine-readable summary dict). Images
    where no ground-truth plane passes the visibility filter are skipped and
    counted. The scene summary aggregates the per-image rows with medians
    (angles, dense error) and means (F-scores).
    """
    if not bundle.gt_planes:
        raise InvalidBundleError("bundle carries no ground-truth planes")
    if bundle.cloud is None:
        raise InvalidBundleError("bundle carries no point cloud for dense errors")
    if not bundle.depths:
        raise InvalidBundleError("bundle carries no depth maps")
    planes = list(planes)
    if not planes:
        raise InsufficientDataError("no predicted planes to evaluate")
    thresholds = tuple(float(t) for t in thresholds)
    pred = PlaneSet(planes)
    gt_all = PlaneSet(bundle.gt_planes)

    reports = []
    rows = []
    skipped = 0
    for idx, (camera, depth) in enumerate(zip(bundle.cameras, bundle.depths)):
        visible = [
            p for p in bundle.gt_planes if visibility_filter(depth, camera, p)
        ]
        if not visible:
            skipped += 1
            log.warning("image %d skipped: no ground-truth plane visible", idx)
            continue
        gt_vis = PlaneSet(visible)
        pairs = assign(_angle_matrix(pred, gt_vis)).pairs
        geodesic = float(np.mean([cost for _, _, cost in pairs]))
        report = EvalReport(
            geodesic=geodesic,
            exactness=exactness(pred, gt_all),
            completeness=completeness(pred, gt_vis),
            fscore_at={t: fscore(pred, gt_all, gt_vis, t) for t in thresholds},
            dense_error=dense_error_set(pred, gt_all, gt_vis, bundle.cloud),
        )
        reports.append(report)
        rows.append(
            {
                "image": idx,
                "visible_gt": len(visible),
                "geodesic_deg": report.geodesic,
                "exactness_deg": report.exactness,
                "completeness_deg": report.completeness,
                "fscore": {f"{t:g}": v for t, v in report.fscore_at.items()},
                "dense_error": report.dense_error,
            }
        )
    if not reports:
        raise InsufficientDataError("no image passed the visibility filter")
    summary = {
        "images": rows,
        "scene": {
            "images_evaluated": len(reports),
            "images_skipped": skipped,
            "median_geodesic_deg": float(np.median([r.geodesic for r in reports])),
            "median_dense_error": float(np.median([r.dense_error for r in reports])),
            "mean_fscore": {
                f"{t:g}": float(np.mean([r.fscore_at[t] for r in reports]))
                for t in thresholds
            },
        },
    }
    return reports, summary
