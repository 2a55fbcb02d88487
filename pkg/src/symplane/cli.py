"""Command-line front end.

Verbs mirror the library surface: generate a synthetic bundle, annotate it
from correspondences, fit a single plane from matched clouds, cluster
candidate planes, fit planes from dense signed-distance predictions,
complete a partial cloud, and score predictions against ground truth.

Exit codes: 0 on success, 2 for validation problems (bad arguments, missing
or malformed files), 3 for well-formed inputs that are geometrically
unusable (too few samples, degenerate or undefined cases).

All randomness is seeded (``--seed``, default 0), and outputs are written
through deterministic serializers, so rerunning a verb with the same inputs
reproduces its output files byte for byte.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .clustering import CandidatePlane, ClusterConfig, cluster_planes
from .errors import (
    DegenerateConfigurationError,
    InsufficientDataError,
    InvalidInputError,
    UndefinedMetricError,
)
from .fitting import FitConfig, PointPairSet, fit_reflection_plane
from .io import (
    parse_config,
    read_cloud_ply,
    read_planes,
    read_prediction_npz,
    write_cloud_ply,
    write_planes,
    write_report,
)
from .pipeline import (
    AnnotateConfig,
    annotate_scene,
    complete_cloud,
    evaluate_scene,
    load_bundle,
    planes_from_prediction,
    write_scene_bundle,
)
from .synthetic import SHAPES, SceneSpec, generate_scene, pixel_match_records

__all__ = ["main", "build_parser"]


def _load_config(args, allowed) -> dict:
    """Read the --config file and reject keys the verb does not understand."""
    if not getattr(args, "config", None):
        return {}
    cfg = parse_config(args.config)
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise InvalidInputError(
            f"config keys {sorted(unknown)} not understood here; allowed: {sorted(allowed)}"
        )
    return cfg


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise InvalidInputError(f"resolution must look like 160x120, got {text!r}")


# ---------------------------------------------------------------------------
# verb handlers


def _cmd_synth(args) -> int:
    spec = SceneSpec(
        shape=args.shape,
        symmetry_count=args.symmetry,
        diameter=args.diameter,
        noise_sigma=args.noise,
        outlier_fraction=args.outliers,
        seed=args.seed,
        camera_count=args.cameras,
        resolution=_parse_resolution(args.resolution),
        base_point_count=args.points,
    )
    scene = generate_scene(spec)
    records = []
    for r in range(len(scene.planes)):
        records.extend(
            pixel_match_records(
                scene,
                r,
                max_matches_per_record=args.matches,
                max_records=args.max_records,
                seed=args.seed,
            )
        )
    root = write_scene_bundle(args.out, scene, records)
    print(
        f"wrote bundle to {root}: {len(scene.cameras)} images, "
        f"{len(scene.planes)} planes, {len(records)} records"
    )
    return 0


def _cmd_annotate(args) -> int:
    cfg = _load_config(args, AnnotateConfig.__dataclass_fields__)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    bundle = load_bundle(args.bundle)
    clusters = annotate_scene(bundle, AnnotateConfig.from_mapping(cfg))
    write_planes(args.out, [c.center for c in clusters], [c.support for c in clusters])
    print(f"wrote {len(clusters)} planes to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    cfg = _load_config(args, {"max_iterations", "ransac_iterations", "inlier_threshold"})
    first, _ = read_cloud_ply(args.first)
    second, _ = read_cloud_ply(args.second)
    config = FitConfig(
        ransac=args.ransac,
        rng=np.random.Generator(np.random.Philox([int(args.seed or 0)])),
        **cfg,
    )
    report = fit_reflection_plane(PointPairSet(first, second), config)
    write_planes(args.out, [report.plane], [float(report.inlier_count)])
    print(
        f"wrote plane to {args.out}: {report.inlier_count} inliers, "
        f"rms residual {report.rms_residual:.6g}"
    )
    return 0


def _cmd_cluster(args) -> int:
    cfg = _load_config(args, {f for f in ClusterConfig.__dataclass_fields__})
    planes, supports = read_planes(args.candidates)
    candidates = [
        CandidatePlane(p, weight=float(w), source_id=i)
        for i, (p, w) in enumerate(zip(planes, supports))
    ]
    clusters = cluster_planes(candidates, ClusterConfig(**cfg))
    write_planes(args.out, [c.center for c in clusters], [c.support for c in clusters])
    print(f"wrote {len(clusters)} clusters to {args.out}")
    return 0


def _cmd_planes_from_sdf(args) -> int:
    cfg = _load_config(args, {"logit_threshold", "confidence_quantile"})
    threshold = cfg.get("logit_threshold", args.logit_threshold)
    quantile = cfg.get("confidence_quantile", args.quantile)
    point_map, sdf_maps, logits = read_prediction_npz(args.prediction)
    reports = planes_from_prediction(
        point_map, sdf_maps, logits, logit_threshold=threshold, confidence_quantile=quantile
    )
    write_planes(args.out, [r.plane for r in reports], [float(r.inlier_count) for r in reports])
    print(f"wrote {len(reports)} planes to {args.out}")
    return 0


def _cmd_complete(args) -> int:
    cfg = _load_config(args, {"depth"})
    depth = int(cfg.get("depth", args.depth))
    points, _ = read_cloud_ply(args.cloud)
    planes, _ = read_planes(args.planes)
    cloud = complete_cloud(points, planes, depth=depth)
    write_cloud_ply(args.out, cloud.points)
    print(f"wrote {cloud.points.shape[0]} points to {args.out} ({points.shape[0]} in)")
    return 0


def _cmd_eval(args) -> int:
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    bundle = load_bundle(args.bundle)
    planes, _ = read_planes(args.pred)
    _, summary = evaluate_scene(bundle, planes, thresholds=thresholds)
    write_report(args.out, summary)
    scene = summary["scene"]
    print(
        f"evaluated {scene['images_evaluated']} images "
        f"({scene['images_skipped']} skipped): "
        f"median geodesic {scene['median_geodesic_deg']:.6g} deg, "
        f"median dense error {scene['median_dense_error']:.6g}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="seed for all randomized steps (default 0)")
    common.add_argument("--config", default=None,
                        help="key = value file with algorithm options")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads where the verb supports them")

    parser = argparse.ArgumentParser(
        prog="symplane",
        description="Reflectional-symmetry annotation, fitting, and evaluation.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic scene bundle")
    p.add_argument("--shape", choices=SHAPES, required=True)
    p.add_argument("--symmetry", type=int, required=True,
                   help="number of mirror planes")
    p.add_argument("--out", required=True, help="bundle directory to create")
    p.add_argument("--cameras", type=int, default=4, help="base viewpoints")
    p.add_argument("--resolution", default="160x120", help="depth size, WxH")
    p.add_argument("--points", type=int, default=8000,
                   help="surface samples before symmetry replication")
    p.add_argument("--diameter", type=float, default=2.0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="cloud noise sigma as a fraction of the diameter")
    p.add_argument("--outliers", type=float, default=0.0,
                   help="fraction of cloud points replaced by outliers")
    p.add_argument("--matches", type=int, default=500,
                   help="pixel matches kept per record")
    p.add_argument("--max-records", type=int, default=None,
                   help="cap on records per mirror plane")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("annotate", parents=[common],
                       help="detect mirror planes from a bundle's records")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="planes JSONL to write")
    p.set_defaults(handler=_cmd_annotate)

    p = sub.add_parser("fit", parents=[common],
                       help="fit one reflection plane from two matched clouds")
    p.add_argument("--first", required=True, help="PLY of first points")
    p.add_argument("--second", required=True,
                   help="PLY of mirrored points, row-aligned with --first")
    p.add_argument("--ransac", action="store_true",
                   help="robust fit (pairs may contain outliers)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("cluster", parents=[common],
                       help="consolidate candidate planes (supports as weights)")
    p.add_argument("--candidates", required=True, help="planes JSONL to read")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_cluster)

    p = sub.add_parser("planes-from-sdf", parents=[common],
                       help="fit planes from dense signed-distance predictions")
    p.add_argument("--prediction", required=True,
                   help="npz with points/valid/sdf/confidence/logits")
    p.add_argument("--logit-threshold", type=float, default=0.0)
    p.add_argument("--quantile", type=float, default=0.5,
                   help="per-instance confidence quantile cutoff")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_planes_from_sdf)

    p = sub.add_parser("complete", parents=[common],
                       help="mirror a partial cloud across detected planes")
    p.add_argument("--cloud", required=True, help="PLY to complete")
    p.add_argument("--planes", required=True, help="planes JSONL")
    p.add_argument("--depth", type=int, default=2,
                   help="max chained reflections")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_complete)

    p = sub.add_parser("eval", parents=[common],
                       help="score predicted planes against a bundle's ground truth")
    p.add_argument("--bundle", required=True)
    p.add_argument("--pred", required=True, help="predicted planes JSONL")
    p.add_argument("--thresholds", default="1,5,15",
                   help="comma-separated F-score thresholds in degrees")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.set_defaults(handler=_cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    if args.seed is None:
        args.seed = 0
    try:
        return int(args.handler(args))
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InsufficientDataError, DegenerateConfigurationError, UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
