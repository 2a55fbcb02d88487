"""Readers and writers for every on-disk artifact.

Structured text goes through JSON Lines: one object per line, floats emitted
with Python's shortest round-trip repr, so a write/read cycle reproduces the
exact binary64 values and rerunning a tool produces byte-identical files.
Bulk arrays go through little-endian binary containers: point clouds as
binary PLY (float32 xyz, optional per-point confidence), depth maps as a
small SYMD container (see ``write_depth``). NaN marks invalid depth pixels.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import CameraModel, DepthMap, Plane, PointMap, SignedDistanceMap, canonicalize

__all__ = [
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
]

DEPTH_MAGIC = b"SYMD"
DEPTH_VERSION = 1
CAMERA_CONVENTION = "world-to-camera"


@dataclass(frozen=True)
class CorrespondenceRecord:
    """Pixel matches between two images of the same scene.

    ``matches`` is an (m, 4) integer array of (u_a, v_a, u_b, v_b) pixel
    coordinates. When ``flipped_b`` is set the second image was mirrored
    horizontally before matching, so the stored u_b live in flipped
    coordinates; ``width - 1 - u_b`` recovers the true column.
    """

    image_a: int
    image_b: int
    flipped_b: bool
    matches: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matches)
        if m.ndim != 2 or m.shape[1] != 4:
            raise InvalidInputError(f"matches must be (m, 4), got {m.shape}")
        if m.size and not np.issubdtype(m.dtype, np.integer):
            as_int = np.asarray(m, dtype=np.int64)
            if not np.array_equal(as_int, m):
                raise InvalidInputError("matches must hold integer pixel coordinates")
            m = as_int
        else:
            m = m.astype(np.int64, copy=True)
        m.flags.writeable = False
        object.__setattr__(self, "matches", m)
        object.__setattr__(self, "image_a", int(self.image_a))
        object.__setattr__(self, "image_b", int(self.image_b))
        object.__setattr__(self, "flipped_b", bool(self.flipped_b))


# ---------------------------------------------------------------------------
# JSON Lines


def _dump_line(obj) -> str:
    return json.dumps(obj, separators=(", ", ": ")) + "\n"


def _load_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}:{lineno}: bad JSON record: {exc}") from exc


def write_planes(path, planes, supports=None) -> None:
    """Write planes as JSON Lines of {normal, offset, support}."""
    planes = list(planes)
    if supports is None:
        supports = [1.0] * len(planes)
    supports = [float(s) for s in supports]
    if len(supports) != len(planes):
        raise InvalidInputError("one support value per plane required")
    with open(path, "w", encoding="utf-8") as fh:
        for plane, support in zip(planes, supports):
            if not isinstance(plane, Plane):
                raise InvalidInputError("write_planes expects Plane items")
            fh.write(
                _dump_line(
                    {
                        "normal": [float(c) for c in plane.normal],
                        "offset": float(plane.offset),
                        "support": support,
                    }
                )
            )


def read_planes(path):
    """Read a plane file; returns (list of canonical Plane, support array)."""
    planes = []
    supports = []
    for rec in _load_lines(path):
        try:
            normal = np.asarray(rec["normal"], dtype=np.float64)
            offset = float(rec["offset"])
            supports.append(float(rec.get("support", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"{path}: malformed plane record: {exc}") from exc
        planes.append(canonicalize(normal, offset))
    return planes, np.asarray(supports, dtype=np.float64)


def write_cameras(path, cameras) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cam in cameras:
            if not isinstance(cam, CameraModel):
                raise InvalidInputError("write_cameras expects CameraModel items")
            fh.write(
                _dump_line(
                    {
                        "fx": float(cam.fx),
                        "fy": float(cam.fy),
                        "cx": float(cam.cx),
                        "cy": float(cam.cy),
                        "rotation": [float(v) for v in cam.rotation.reshape(-1)],
                        "translation": [float(v) for v in cam.translation],
                        "convention": CAMERA_CONVENTION,
                    }
                )
            )


def read_cameras(path):
    cameras = []
    for rec in _load_lines(path):
        if rec.get("convention") != CAMERA_CONVENTION:
            raise InvalidInputError(
                f"{path}: unsupported camera convention {rec.get('convention')!r}"
            )
        try:
            cameras.append(
                CameraModel(
                    fx=float(rec["fx"]),
                    fy=float(rec["fy"]),
                    cx=float(rec["cx"]),
                    cy=float(rec["cy"]),
                    rotation=np.asarray(rec["rotation"], dtype=np.float64).reshape(3, 3),
                    translation=np.asarray(rec["translation"], dtype=np.float64),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"{path}: malformed camera record: {exc}") from exc
    return cameras


def write_correspondences(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if not isinstance(rec, CorrespondenceRecord):
                raise InvalidInputError("write_correspondences expects CorrespondenceRecord items")
            fh.write(
                _dump_line(
                    {
                        "image_a": rec.image_a,
                        "image_b": rec.image_b,
                        "flipped_b": rec.flipped_b,
                        "matches": rec.matches.tolist(),
                    }
                )
            )


def read_correspondences(path):
    records = []
    for rec in _load_lines(path):
        try:
            records.append(
                CorrespondenceRecord(
                    image_a=rec["image_a"],
                    image_b=rec["image_b"],
                    flipped_b=rec["flipped_b"],
                    matches=np.asarray(rec["matches"], dtype=np.int64).reshape(-1, 4),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"{path}: malformed correspondence record: {exc}") from exc
    return records


# ---------------------------------------------------------------------------
# PLY point clouds


def write_cloud_ply(path, points, confidence=None) -> None:
    """Write xyz (and optional confidence) as binary little-endian PLY float32."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInputError(f"points must be (n, 3), got {pts.shape}")
    header = [
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {pts.shape[0]}",
        "property float x",
        "property float y",
        "property float z",
    ]
    columns = [pts.astype("<f4")]
    if confidence is not None:
        conf = np.asarray(confidence, dtype=np.float64).reshape(-1)
        if conf.shape[0] != pts.shape[0]:
            raise InvalidInputError("one confidence value per point required")
        header.append("property float confidence")
        columns.append(conf.astype("<f4")[:, None])
    header.append("end_header")
    body = np.hstack(columns).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(body.tobytes())


def read_cloud_ply(path):
    """Read a binary PLY written by ``write_cloud_ply``.

    Returns (points (n, 3) float64, confidence or None). Only the x/y/z
    [+ confidence] float32 layout is accepted; anything else is rejected
    rather than half-parsed.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply\n") or end < 0:
        raise InvalidInputError(f"{path}: not a PLY file")
    header = raw[: end + len(b"end_header\n")]
    lines = header.decode("ascii", errors="replace").splitlines()
    if len(lines) < 3 or "format binary_little_endian 1.0" not in lines[1]:
        raise InvalidInputError(f"{path}: expected binary little-endian PLY")
    count = None
    props = []
    for line in lines[2:]:
        parts = line.split()
        if not parts or parts[0] in ("comment", "end_header"):
            continue
        if parts[:2] == ["element", "vertex"]:
            count = int(parts[2])
        elif parts[0] == "element":
            raise InvalidInputError(f"{path}: unsupported element {parts[1]!r}")
        elif parts[0] == "property":
            if parts[1] != "float":
                raise InvalidInputError(f"{path}: unsupported property type {parts[1]!r}")
            props.append(parts[2])
    if count is None or props[:3] != ["x", "y", "z"]:
        raise InvalidInputError(f"{path}: vertex element with float x/y/z required")
    if len(props) > 4 or (len(props) == 4 and props[3] != "confidence"):
        raise InvalidInputError(f"{path}: unexpected vertex properties {props}")
    body = raw[end + len(b"end_header\n") :]
    width = len(props)
    if len(body) != 4 * width * count:
        raise InvalidInputError(
            f"{path}: payload holds {len(body)} bytes, expected {4 * width * count}"
        )
    table = np.frombuffer(body, dtype="<f4").reshape(count, width).astype(np.float64)
    conf = table[:, 3].copy() if width == 4 else None
    return table[:, :3].copy(), conf


# ---------------------------------------------------------------------------
# SYMD depth maps


def write_depth(path, depth: DepthMap) -> None:
    """Write a depth map as magic 'SYMD', u16 version, u32 width, u32 height
    (all little-endian), then row-major float32 with NaN for invalid pixels."""
    if not isinstance(depth, DepthMap):
        raise InvalidInputError("write_depth expects a DepthMap")
    grid = depth.depth
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHII", DEPTH_MAGIC, DEPTH_VERSION, grid.shape[1], grid.shape[0]))
        fh.write(np.ascontiguousarray(grid, dtype="<f4").tobytes())


def read_depth(path) -> DepthMap:
    with open(path, "rb") as fh:
        raw = fh.read()
    head = struct.calcsize("<4sHII")
    if len(raw) < head:
        raise InvalidInputError(f"{path}: truncated depth container")
    magic, version, width, height = struct.unpack_from("<4sHII", raw)
    if magic != DEPTH_MAGIC:
        raise InvalidInputError(f"{path}: bad magic {magic!r}")
    if version != DEPTH_VERSION:
        raise InvalidInputError(f"{path}: unsupported depth container version {version}")
    if width == 0 or height == 0:
        raise InvalidInputError(f"{path}: empty depth grid {width}x{height}")
    if len(raw) != head + 4 * width * height:
        raise InvalidInputError(
            f"{path}: payload holds {len(raw) - head} bytes, expected {4 * width * height}"
        )
    grid = np.frombuffer(raw, dtype="<f4", offset=head).reshape(height, width)
    return DepthMap(grid.astype(np.float64))


# ---------------------------------------------------------------------------
# dense predictions


def read_prediction_npz(path):
    """Read a dense prediction bundle from one .npz archive.

    Required arrays: ``points`` (H, W, 3), ``valid`` (H, W) bool, ``sdf``
    (P, H, W), ``confidence`` (P, H, W), ``logits`` (P,). Returns
    (PointMap, list of SignedDistanceMap, logits array).
    """
    with np.load(path) as archive:
        missing = [k for k in ("points", "valid", "sdf", "confidence", "logits") if k not in archive]
        if missing:
            raise InvalidInputError(f"{path}: missing arrays {missing}")
        points = np.asarray(archive["points"], dtype=np.float64)
        valid = np.asarray(archive["valid"], dtype=bool)
        sdf = np.asarray(archive["sdf"], dtype=np.float64)
        confidence = np.asarray(archive["confidence"], dtype=np.float64)
        logits = np.asarray(archive["logits"], dtype=np.float64).reshape(-1)
    if sdf.ndim != 3:
        raise InvalidInputError(f"{path}: sdf must be (instances, H, W), got {sdf.shape}")
    if confidence.shape != sdf.shape:
        raise InvalidInputError(f"{path}: confidence shape {confidence.shape} != sdf {sdf.shape}")
    if logits.shape[0] != sdf.shape[0]:
        raise InvalidInputError(f"{path}: one logit per sdf instance required")
    point_map = PointMap(points, valid)
    if sdf.shape[1:] != (point_map.height, point_map.width):
        raise InvalidInputError(f"{path}: sdf grids {sdf.shape[1:]} do not match points")
    maps = []
    for inst in range(sdf.shape[0]):
        value_valid = valid & np.isfinite(sdf[inst]) & np.isfinite(confidence[inst])
        conf = np.where(value_valid, confidence[inst], np.nan)
        maps.append(SignedDistanceMap(sdf[inst], value_valid, conf))
    return point_map, maps, logits


# ---------------------------------------------------------------------------
# config files and reports


def parse_config(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment. Values decode as int,
    then float, then true/false, and fall back to the raw string."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise InvalidInputError(f"{path}:{lineno}: empty key")
            out[key] = _decode_value(value)
    return out


def _decode_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
