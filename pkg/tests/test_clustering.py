import math

import numpy as np
import pytest

from symplane import (
    CandidatePlane,
    ClusterConfig,
    InvalidInputError,
    Plane,
    canonicalize,
    cluster_planes,
    plane_distance,
)

from helpers import assert_planes_close, make_rng, random_plane, random_unit


def _candidate(normal, offset, weight=1.0, source=None):
    return CandidatePlane(canonicalize(np.asarray(normal, dtype=float), offset), weight, source)


def _perturb(rng, plane, max_angle_deg, max_offset):
    axis = np.cross(plane.normal, random_unit(rng))
    axis /= np.linalg.norm(axis)
    angle = math.radians(float(rng.uniform(0.0, max_angle_deg)))
    n = (
        plane.normal * math.cos(angle)
        + axis * math.sin(angle)
    )
    d = plane.offset + float(rng.uniform(-max_offset, max_offset))
    return canonicalize(n, d)


# ---------------------------------------------------------------------------
# metric


def test_distance_identical_is_zero():
    p = Plane(np.array([0.0, 0.0, 1.0]), 2.5)
    assert plane_distance(p, p) == 0.0


def test_distance_orthogonal_normals():
    a = Plane(np.array([1.0, 0.0, 0.0]), 0.0)
    b = Plane(np.array([0.0, 1.0, 0.0]), 0.0)
    assert plane_distance(a, b, angle_scale=math.pi / 2, offset_scale=1.0) == pytest.approx(
        1.0, abs=1e-15
    )


def test_distance_sign_equivalent_planes_is_zero():
    a = Plane(np.array([1.0, 0.0, 0.0]), 0.75)
    b = Plane(np.array([-1.0, 0.0, 0.0]), -0.75)
    assert plane_distance(a, b) == 0.0


def test_distance_symmetry_and_triangle():
    rng = make_rng([41, 0])
    for _ in range(300):
        a, b, c = (random_plane(rng) for _ in range(3))
        dab = plane_distance(a, b, 0.1, 0.05)
        dba = plane_distance(b, a, 0.1, 0.05)
        assert dab == dba
        dac = plane_distance(a, c, 0.1, 0.05)
        dbc = plane_distance(b, c, 0.1, 0.05)
        assert dac <= dab + dbc + 1e-9


def test_distance_rejects_bad_scales():
    p = Plane(np.array([0.0, 0.0, 1.0]), 0.0)
    with pytest.raises(InvalidInputError):
        plane_distance(p, p, angle_scale=0.0)


# ---------------------------------------------------------------------------
# clustering


def _four_true_planes():
    s = math.sqrt(0.5)
    return [
        canonicalize(np.array([1.0, 0.0, 0.0]), 0.4),
        canonicalize(np.array([0.0, 1.0, 0.0]), -0.9),
        canonicalize(np.array([s, s, 0.0]), 0.1),
        canonicalize(np.array([0.0, 0.0, 1.0]), 1.3),
    ]


def test_four_perturbed_groups_recovered():
    rng = make_rng([41, 1])
    truths = _four_true_planes()
    candidates = []
    for t, truth in enumerate(truths):
        for k in range(100):
            p = _perturb(rng, truth, max_angle_deg=0.5, max_offset=0.002)
            candidates.append(CandidatePlane(p, weight=1.0, source_id=(t, k)))
    config = ClusterConfig(eps=1.0, min_points=20, angle_scale=math.radians(5.0), offset_scale=0.04)
    clusters = cluster_planes(candidates, config)
    assert len(clusters) == 4
    matched = set()
    for cluster in clusters:
        errs = [
            (plane_distance(cluster.center, truth, 1.0, 1.0), i)
            for i, truth in enumerate(truths)
        ]
        _, best = min(errs)
        matched.add(best)
        assert_planes_close(cluster.center, truths[best], angle_deg=0.2, offset=0.002)
        assert cluster.support == pytest.approx(100.0)
        # cluster cohesion: mean member distance from the center within eps
        mean_d = np.mean(
            [
                plane_distance(cluster.center, m.plane, config.angle_scale, config.offset_scale)
                for m in cluster.members
            ]
        )
        assert mean_d <= config.eps
    assert matched == {0, 1, 2, 3}


def test_identical_candidates_form_single_exact_cluster():
    plane = canonicalize(np.array([0.6, 0.0, 0.8]), -1.25)
    candidates = [CandidatePlane(plane, 2.0, i) for i in range(10)]
    clusters = cluster_planes(candidates, ClusterConfig(eps=0.5, min_points=3))
    assert len(clusters) == 1
    assert_planes_close(clusters[0].center, plane, angle_deg=1e-9, offset=1e-9)
    assert clusters[0].support == pytest.approx(20.0)
    assert len(clusters[0].members) == 10


def test_distant_candidates_are_noise():
    candidates = [
        _candidate([1.0, 0.0, 0.0], 0.0),
        _candidate([0.0, 1.0, 0.0], 5.0),
        _candidate([0.0, 0.0, 1.0], -5.0),
        _candidate([1.0, 0.0, 0.0], 50.0),
        _candidate([0.0, 1.0, 0.0], -50.0),
    ]
    clusters = cluster_planes(candidates, ClusterConfig(eps=0.1, min_points=3))
    assert clusters == []


def test_empty_input():
    assert cluster_planes([], ClusterConfig()) == []


def test_weight_counts_toward_core_density():
    plane = canonicalize(np.array([0.0, 0.0, 1.0]), 0.0)
    heavy = [CandidatePlane(plane, 10.0, i) for i in range(3)]
    assert len(cluster_planes(heavy, ClusterConfig(eps=0.5, min_points=20))) == 1
    light = [CandidatePlane(plane, 5.0, i) for i in range(3)]
    assert cluster_planes(light, ClusterConfig(eps=0.5, min_points=20)) == []


def test_permutation_invariance():
    rng = make_rng([41, 2])
    truths = _four_true_planes()
    candidates = []
    for t, truth in enumerate(truths):
        for k in range(30):
            candidates.append(
                CandidatePlane(_perturb(rng, truth, 0.3, 0.001), 1.0 + 0.1 * k, (t, k))
            )
    config = ClusterConfig(eps=1.0, min_points=5, angle_scale=math.radians(5.0), offset_scale=0.04)
    base = cluster_planes(candidates, config)

    perm = rng.permutation(len(candidates))
    shuffled = cluster_planes([candidates[i] for i in perm], config)
    assert len(base) == len(shuffled)
    # identical cluster *sets*: order among equal-support clusters follows
    # input order, so match clusters by membership before comparing centers
    by_members = {tuple(sorted(m.source_id for m in c.members)): c for c in shuffled}
    for a in base:
        b = by_members[tuple(sorted(m.source_id for m in a.members))]
        assert a.support == pytest.approx(b.support, abs=1e-12)
        assert np.allclose(a.center.normal, b.center.normal, atol=1e-12)
        assert a.center.offset == pytest.approx(b.center.offset, abs=1e-12)


def test_clusters_sorted_by_support():
    pa = canonicalize(np.array([1.0, 0.0, 0.0]), 0.0)
    pb = canonicalize(np.array([0.0, 0.0, 1.0]), 3.0)
    candidates = [CandidatePlane(pa, 1.0, f"a{i}") for i in range(4)] + [
        CandidatePlane(pb, 1.0, f"b{i}") for i in range(7)
    ]
    clusters = cluster_planes(candidates, ClusterConfig(eps=0.5, min_points=2))
    assert [c.support for c in clusters] == [7.0, 4.0]
    assert {m.source_id[0] for m in clusters[0].members} == {"b"}


def test_candidate_validation():
    plane = canonicalize(np.array([0.0, 0.0, 1.0]), 0.0)
    with pytest.raises(InvalidInputError):
        CandidatePlane(plane, 0.0)
    with pytest.raises(InvalidInputError):
        CandidatePlane(Plane(np.array([0.0, 0.0, -1.0]), 1.0), 1.0)  # not canonical
    with pytest.raises(InvalidInputError):
        cluster_planes([plane], ClusterConfig())  # bare Plane, not CandidatePlane
    with pytest.raises(InvalidInputError):
        ClusterConfig(eps=-1.0)
    with pytest.raises(InvalidInputError):
        ClusterConfig(min_points=0)


def test_weighted_median_is_lower_middle():
    # two members, equal weight: the smaller offset wins (no averaging)
    plane_lo = canonicalize(np.array([0.0, 0.0, 1.0]), 1.0)
    plane_hi = canonicalize(np.array([0.0, 0.0, 1.0]), 1.1)
    clusters = cluster_planes(
        [CandidatePlane(plane_lo, 1.0), CandidatePlane(plane_hi, 1.0)],
        ClusterConfig(eps=10.0, min_points=2, offset_scale=1.0),
    )
    assert len(clusters) == 1
    assert clusters[0].center.offset == pytest.approx(1.0, abs=1e-15)
