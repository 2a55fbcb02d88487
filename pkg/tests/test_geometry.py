import math

import numpy as np
import pytest

from symplane import (
    CameraModel,
    DepthMap,
    InvalidInputError,
    InvalidPlaneError,
    NoDepthError,
    OutOfBoundsError,
    Plane,
    PointCloud,
    PointMap,
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

from helpers import make_rng, random_plane, random_rotation, random_unit

SQ2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# canonical form


def test_canonicalize_flips_negative_dominant_component():
    p = canonicalize(np.array([-1.0, 0.0, 0.0]), 2.0)
    assert np.array_equal(p.normal, [1.0, 0.0, 0.0])
    assert p.offset == -2.0


def test_canonicalize_fixed_point():
    p = canonicalize(np.array([0.0, 0.0, 1.0]), 0.0)
    assert np.array_equal(p.normal, [0.0, 0.0, 1.0])
    assert p.offset == 0.0


def test_canonicalize_dominant_is_largest_magnitude():
    # largest-|component| is -0.8 at index 1, so the whole plane flips
    p = canonicalize(np.array([0.6, -0.8, 0.0]), 1.0)
    assert np.allclose(p.normal, [-0.6, 0.8, 0.0], atol=1e-15)
    assert p.offset == pytest.approx(-1.0, abs=1e-15)


def test_canonicalize_rescales_jointly():
    p = canonicalize(np.array([3.0, 0.0, 4.0]), 5.0)
    assert np.allclose(p.normal, [0.6, 0.0, 0.8], atol=1e-15)
    assert p.offset == pytest.approx(1.0, abs=1e-15)


def test_canonicalize_tie_breaks_on_lowest_index():
    p = canonicalize(np.array([-1.0, -1.0, 0.0]) / SQ2, 0.5)
    assert p.normal[0] > 0 and p.normal[1] > 0
    assert p.offset == pytest.approx(-0.5, abs=1e-15)


def test_canonicalize_idempotent_and_sign_invariant():
    rng = make_rng([11, 0])
    for _ in range(200):
        n = random_unit(rng)
        d = float(rng.uniform(-3, 3))
        a = canonicalize(n, d)
        b = canonicalize(-n, -d)
        c = canonicalize(a.normal, a.offset)
        assert np.array_equal(a.normal, b.normal)
        assert a.offset == b.offset
        assert np.array_equal(a.normal, c.normal)
        assert a.offset == c.offset
        assert a.is_canonical


def test_canonicalize_zero_normal_rejected():
    with pytest.raises(InvalidPlaneError):
        canonicalize(np.zeros(3), 1.0)


def test_canonicalize_plane_with_offset_rejected():
    p = Plane(np.array([1.0, 0.0, 0.0]), 0.0)
    with pytest.raises(InvalidInputError):
        canonicalize(p, 1.0)


def test_plane_requires_unit_normal():
    with pytest.raises(InvalidPlaneError):
        Plane(np.array([1.0, 1.0, 0.0]), 0.0)
    with pytest.raises(InvalidInputError):
        Plane(np.array([1.0, 0.0]), 0.0)


# ---------------------------------------------------------------------------
# reflection + signed distance


def test_reflect_point_examples():
    p = reflect_point(Plane(np.array([1.0, 0.0, 0.0]), 0.0), np.array([2.0, 1.0, 1.0]))
    assert np.allclose(p, [-2.0, 1.0, 1.0], atol=1e-15)

    p = reflect_point(Plane(np.array([0.0, 1.0, 0.0]), -3.0), np.array([5.0, 3.0, 7.0]))
    assert np.allclose(p, [5.0, 3.0, 7.0], atol=1e-15)

    p = reflect_point(Plane(np.array([0.0, 0.0, 1.0]), 1.0), np.array([0.0, 0.0, 2.0]))
    assert np.allclose(p, [0.0, 0.0, -4.0], atol=1e-15)


def test_signed_distance_examples():
    assert signed_distance(
        Plane(np.array([0.0, 0.0, 1.0]), -1.0), np.array([0.0, 0.0, 3.0])
    ) == pytest.approx(2.0, abs=1e-15)
    assert signed_distance(
        Plane(np.array([0.0, 1.0, 0.0]), -3.0), np.array([5.0, 3.0, 7.0])
    ) == pytest.approx(0.0, abs=1e-15)
    got = signed_distance(
        Plane(np.array([SQ2 / 2, SQ2 / 2, 0.0]), 1.0), np.array([1.0, 1.0, 0.0])
    )
    assert got == pytest.approx(1.0 + SQ2, abs=1e-12)


def test_reflection_is_involution_and_isometry():
    rng = make_rng([11, 1])
    for _ in range(50):
        plane = random_plane(rng)
        pts = rng.normal(size=(64, 3)) * 5.0
        ref = reflect_points(plane, pts)
        back = reflect_points(plane, ref)
        scale = np.abs(pts).max()
        assert np.abs(back - pts).max() <= 1e-12 * max(1.0, scale)
        # pairwise distances survive the reflection
        d0 = np.linalg.norm(pts[None, :, :] - pts[:, None, :], axis=-1)
        d1 = np.linalg.norm(ref[None, :, :] - ref[:, None, :], axis=-1)
        assert np.abs(d1 - d0).max() <= 1e-12 * max(1.0, d0.max())


def test_signed_distance_negates_under_reflection():
    rng = make_rng([11, 2])
    for _ in range(50):
        plane = random_plane(rng)
        pts = rng.normal(size=(32, 3)) * 4.0
        s = signed_distances(plane, pts)
        s_ref = signed_distances(plane, reflect_points(plane, pts))
        assert np.abs(s + s_ref).max() <= 1e-12 * max(1.0, np.abs(s).max())


def test_reflect_cloud_cube_and_empty():
    corners = np.array(
        [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)]
    )
    cloud = PointCloud(corners)
    plane = Plane(np.array([1.0, 0.0, 0.0]), 0.0)
    mirrored = reflect_cloud(plane, cloud)
    want = corners.copy()
    want[:, 0] *= -1.0
    assert np.allclose(mirrored.points, want, atol=1e-15)

    empty = reflect_cloud(plane, PointCloud(np.zeros((0, 3))))
    assert len(empty) == 0


def test_reflect_cloud_half_box_union_is_full_box():
    rng = make_rng([11, 3])
    half = rng.uniform(0.0, 1.0, size=(500, 3))  # x in [0, 1]
    plane = Plane(np.array([1.0, 0.0, 0.0]), 0.0)
    mirrored = reflect_cloud(plane, PointCloud(half))
    both = np.vstack([half, mirrored.points])
    assert both[:, 0].min() < -0.9 and both[:, 0].max() > 0.9
    assert np.allclose(np.abs(both[:, 0]), np.vstack([half, half])[:, 0], atol=1e-15)


# ---------------------------------------------------------------------------
# cameras


def _identity_camera(fx=1.0, fy=1.0, cx=0.0, cy=0.0):
    return CameraModel(fx, fy, cx, cy, np.eye(3), np.zeros(3))


def test_unproject_identity_center_pixel():
    depth = DepthMap(np.full((1, 1), 5.0))
    cam = _identity_camera()
    p = unproject(depth, cam, (0, 0))
    assert np.allclose(p, [0.0, 0.0, 5.0], atol=1e-15)


def test_unproject_identity_off_center():
    vals = np.full((2, 3), np.nan)
    vals[1, 2] = 2.0
    depth = DepthMap(vals)
    cam = _identity_camera(fx=2.0, fy=2.0, cx=1.0, cy=1.0)
    p = unproject(depth, cam, (2, 1))
    assert np.allclose(p, [1.0, 0.0, 2.0], atol=1e-15)


def test_unproject_translated_camera():
    depth = DepthMap(np.full((1, 1), 1.0))
    cam = CameraModel(1.0, 1.0, 0.0, 0.0, np.eye(3), np.array([0.0, 0.0, -1.0]))
    p = unproject(depth, cam, (0, 0))
    assert np.allclose(p, [0.0, 0.0, 2.0], atol=1e-15)


def test_unproject_errors():
    vals = np.full((4, 4), np.nan)
    vals[2, 1] = 3.0
    depth = DepthMap(vals)
    cam = _identity_camera()
    with pytest.raises(NoDepthError):
        unproject(depth, cam, (0, 0))
    with pytest.raises(OutOfBoundsError):
        unproject(depth, cam, (4, 0))
    with pytest.raises(OutOfBoundsError):
        unproject(depth, cam, (-1, 2))
    with pytest.raises(InvalidInputError):
        unproject(depth, cam, (1.5, 2))
    # integral floats are accepted
    p = unproject(depth, cam, (1.0, 2.0))
    assert np.isfinite(p).all()


def test_project_unproject_round_trip():
    rng = make_rng([11, 4])
    for _ in range(100):
        w, h = 64, 48
        fx = float(rng.uniform(30, 120))
        fy = float(rng.uniform(30, 120))
        cx = float(rng.uniform(20, 44))
        cy = float(rng.uniform(14, 34))
        rot = random_rotation(rng)
        t = rng.normal(size=3)
        cam = CameraModel(fx, fy, cx, cy, rot, t)
        vals = rng.uniform(0.5, 6.0, size=(h, w))
        depth = DepthMap(vals)
        for _ in range(10):
            u = int(rng.integers(0, w))
            v = int(rng.integers(0, h))
            world = unproject(depth, cam, (u, v))
            pu, pv, z = project_points(cam, world[None, :])
            assert abs(pu[0] - u) <= 1e-9
            assert abs(pv[0] - v) <= 1e-9
            assert abs(z[0] - vals[v, u]) <= 1e-9 * vals[v, u]


def test_unproject_map_matches_scalar_path():
    rng = make_rng([11, 5])
    w, h = 17, 13
    cam = CameraModel(25.0, 27.0, 8.0, 6.0, random_rotation(rng), rng.normal(size=3))
    vals = rng.uniform(1.0, 4.0, size=(h, w))
    vals[rng.random(size=(h, w)) < 0.3] = np.nan
    depth = DepthMap(vals)
    pm = unproject_map(depth, cam)
    assert isinstance(pm, PointMap)
    assert pm.valid.sum() == np.isfinite(vals).sum()
    for v in range(h):
        for u in range(w):
            if np.isfinite(vals[v, u]):
                assert pm.valid[v, u]
                assert np.allclose(pm.points[v, u], unproject(depth, cam, (u, v)), atol=1e-12)
            else:
                assert not pm.valid[v, u]
    assert len(pm.valid_points()) == pm.valid.sum()


def test_camera_validation_and_center():
    with pytest.raises(InvalidInputError):
        CameraModel(0.0, 1.0, 0.0, 0.0, np.eye(3), np.zeros(3))
    bad = np.eye(3)
    bad[0, 0] = 2.0
    with pytest.raises(InvalidInputError):
        CameraModel(1.0, 1.0, 0.0, 0.0, bad, np.zeros(3))
    refl = np.diag([-1.0, 1.0, 1.0])
    with pytest.raises(InvalidInputError):
        CameraModel(1.0, 1.0, 0.0, 0.0, refl, np.zeros(3))
    rng = make_rng([11, 6])
    rot = random_rotation(rng)
    t = rng.normal(size=3)
    cam = CameraModel(1.0, 1.0, 0.0, 0.0, rot, t)
    assert np.allclose(rot @ cam.center + t, 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# containers


def test_point_cloud_validation():
    with pytest.raises(InvalidInputError):
        PointCloud(np.zeros((3, 2)))
    with pytest.raises(InvalidInputError):
        PointCloud(np.array([[0.0, 0.0, np.inf]]))
    pc = PointCloud(np.zeros((3, 3)))
    assert len(pc) == 3
    with pytest.raises(ValueError):
        pc.points[0, 0] = 1.0  # stored array is read-only


def test_depth_map_rejects_nonpositive():
    with pytest.raises(InvalidInputError):
        DepthMap(np.array([[1.0, -2.0]]))
    with pytest.raises(InvalidInputError):
        DepthMap(np.array([[0.0]]))
    dm = DepthMap(np.array([[1.0, np.nan]]))
    assert dm.valid.tolist() == [[True, False]]


def test_cloud_diameter_small_and_subsampled():
    pts = np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0], [1.0, 1.0, 0.0]])
    assert cloud_diameter(PointCloud(pts)) == pytest.approx(5.0, abs=1e-12)
    rng = make_rng([11, 7])
    big = rng.normal(size=(5000, 3))
    big[0] = [-10.0, 0.0, 0.0]
    big[-1] = [10.0, 0.0, 0.0]
    d = cloud_diameter(PointCloud(big))
    assert d >= 20.0  # axis extremes always participate
