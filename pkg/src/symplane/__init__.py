"""symplane: reflectional-symmetry annotation and evaluation for 3D scenes.

The package detects, parameterizes, clusters, and scores mirror-symmetry
planes of 3D scenes given point correspondences, depth maps, or predicted
signed-distance maps, and completes partial point clouds by reflection. A
synthetic scene generator with exact ground truth drives the test and
benchmark workloads; the ``symplane`` CLI wires the pieces into a bundle-
oriented pipeline.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import (
    DegenerateConfigurationError,
    InsufficientDataError,
    InvalidBundleError,
    InvalidInputError,
    InvalidPlaneError,
    NoDepthError,
    OutOfBoundsError,
    SymplaneError,
    UndefinedMetricError,
)
from .alignment import (
    SimilarityTransform,
    estimate_similarity,
    estimate_similarity_from_maps,
    transform_plane,
)
from .clustering import (
    CandidatePlane,
    ClusterConfig,
    PlaneCluster,
    cluster_planes,
    plane_distance,
)
from .fitting import (
    FitConfig,
    FitReport,
    PointPairSet,
    SdfSampleSet,
    fit_plane_from_sdf,
    fit_reflection_plane,
)
from .metrics import (
    Assignment,
    EvalReport,
    PlaneSet,
    assign,
    completeness,
    dense_error,
    dense_error_set,
    exactness,
    fscore,
    matching_cost,
    mean_matched_loss,
    normal_angle,
    visibility_filter,
)
from .geometry import (
    CameraModel,
    DepthMap,
    Plane,
    PointCloud,
    PointMap,
    SignedDistanceMap,
    canonicalize,
    cloud_diameter,
    project_points,
    reflect_cloud,
    reflect_point,
    reflect_points,
    signed_distance,
    signed_distances,
    unproject,
    unproject_map,
)
from .io import (
    CorrespondenceRecord,
    parse_config,
    read_cameras,
    read_cloud_ply,
    read_correspondences,
    read_depth,
    read_planes,
    read_prediction_npz,
    write_cameras,
    write_cloud_ply,
    write_correspondences,
    write_depth,
    write_planes,
    write_report,
)
from .synthetic import (
    SHAPES,
    GroundTruthScene,
    SceneSpec,
    generate_scene,
    pixel_match_records,
    sample_correspondences,
)
from .pipeline import (
    AnnotateConfig,
    SceneBundle,
    annotate_scene,
    bundle_from_scene,
    complete_cloud,
    evaluate_scene,
    load_bundle,
    planes_from_prediction,
    unflip,
    write_scene_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "SymplaneError",
    "InvalidInputError",
    "InvalidPlaneError",
    "OutOfBoundsError",
    "NoDepthError",
    "InvalidBundleError",
    "InsufficientDataError",
    "DegenerateConfigurationError",
    "UndefinedMetricError",
    "Plane",
    "PointCloud",
    "PointMap",
    "DepthMap",
    "CameraModel",
    "SignedDistanceMap",
    "SimilarityTransform",
    "estimate_similarity",
    "estimate_similarity_from_maps",
    "transform_plane",
    "CandidatePlane",
    "PlaneCluster",
    "ClusterConfig",
    "plane_distance",
    "cluster_planes",
    "PointPairSet",
    "SdfSampleSet",
    "FitConfig",
    "FitReport",
    "fit_reflection_plane",
    "fit_plane_from_sdf",
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
    "canonicalize",
    "signed_distance",
    "signed_distances",
    "reflect_point",
    "reflect_points",
    "reflect_cloud",
    "unproject",
    "unproject_map",
    "project_points",
    "cloud_diameter",
    "CorrespondenceRecord",
    "read_planes",
    "write_planes",
    "read_cameras",
    "write_cameras",
    "read_correspondences",
    "write_correspondences",
    "read_cloud_ply",
    "write_cloud_ply",
    "read_depth",
    "write_depth",
    "read_prediction_npz",
    "parse_config",
    "write_report",
    "SHAPES",
    "SceneSpec",
    "GroundTruthScene",
    "generate_scene",
    "sample_correspondences",
    "pixel_match_records",
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
    "__version__",
]
