"""Shared test utilities: deterministic random geometry and comparison helpers."""

from __future__ import annotations

import math

import numpy as np

from symplane import Plane, canonicalize


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_unit(rng) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def random_plane(rng, offset_scale: float = 2.0) -> Plane:
    return canonicalize(random_unit(rng), rng.uniform(-offset_scale, offset_scale))


def random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def normal_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    # atan2 form: exact near 0 where acos(|dot|) bottoms out at ~8.5e-7 deg
    cross = np.linalg.norm(np.cross(a, b))
    dot = abs(float(np.dot(a, b)))
    return math.degrees(math.atan2(cross, dot))


def assert_planes_close(got: Plane, want: Plane, angle_deg: float, offset: float, msg=""):
    ang = normal_angle_deg(got.normal, want.normal)
    # Both canonical; compare offsets with the sign that matches the normals.
    sign = 1.0 if float(np.dot(got.normal, want.normal)) >= 0 else -1.0
    doff = abs(got.offset - sign * want.offset)
    assert ang <= angle_deg, f"{msg} normal angle {ang} deg > {angle_deg} ({got} vs {want})"
    assert doff <= offset, f"{msg} offset error {doff} > {offset} ({got} vs {want})"


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets (KD-tree based)."""
    from scipy.spatial import cKDTree

    ta, tb = cKDTree(a), cKDTree(b)
    d_ab = tb.query(a, k=1)[0].max() if len(a) else 0.0
    d_ba = ta.query(b, k=1)[0].max() if len(b) else 0.0
    return float(max(d_ab, d_ba))


# ---------------------------------------------------------------------------
# brute-force fit oracles: dense sphere grid + local polish, independent of
# the library's solvers. Objective evaluations are self-validated against a
# direct per-residual computation before they are trusted.


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    polar = np.arccos(1.0 - 2.0 * i / n)
    azimuth = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack(
        [np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)]
    )


def reflection_objective(normal, offset, first, second) -> float:
    """Direct sum of squared pair residuals (the quantity both routes must agree on)."""
    s = second @ normal + offset
    r = first - second + 2.0 * s[:, None] * normal[None, :]
    return float(np.einsum("ij,ij->i", r, r).sum())


def _spherical(params):
    t, p = params[0], params[1]
    return np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])


def oracle_fit_reflection(first, second, grid=20000):
    """Global-ish minimum of the reflection objective by exhaustive search.

    Scans `grid` sphere directions with the per-direction optimal offset
    (offset gradient vanishes at -n.mean(midpoints): expanding the residual
    gives ||q||^2 - (n.q)^2 + 4(n.m + d)^2 per pair), then polishes the best
    direction with Nelder-Mead on (polar, azimuth, offset).

    Returns (objective, normal, offset).
    """
    from scipy.optimize import minimize

    q = first - second
    m = 0.5 * (first + second)
    m_mean = m.mean(axis=0)
    q2_sum = float(np.einsum("ij,ij->i", q, q).sum())
    dirs = fibonacci_sphere(grid)
    best_obj, best_dir, best_off = np.inf, None, None
    for lo in range(0, grid, 2000):
        block = dirs[lo : lo + 2000]
        nq = block @ q.T
        nm = block @ m.T
        d = -(block @ m_mean)
        obj = q2_sum - np.einsum("gk,gk->g", nq, nq) + 4.0 * (
            np.einsum("gk,gk->g", nm, nm)
            + 2.0 * d * nm.sum(axis=1)
            + first.shape[0] * d * d
        )
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj, best_dir, best_off = float(obj[k]), block[k], float(d[k])
    # identity self-check on a few directions before trusting the scan
    for probe in (dirs[17], dirs[grid // 3], best_dir):
        doff = -float(probe @ m_mean)
        direct = reflection_objective(probe, doff, first, second)
        nq = q @ probe
        nm = m @ probe + doff
        fast = q2_sum - float(nq @ nq) + 4.0 * float(nm @ nm)
        assert abs(direct - fast) <= 1e-9 * max(1.0, abs(direct)), "oracle identity broken"

    t0 = math.acos(max(-1.0, min(1.0, best_dir[2])))
    p0 = math.atan2(best_dir[1], best_dir[0])

    def fun(params):
        return reflection_objective(_spherical(params), params[2], first, second)

    res = minimize(
        fun,
        np.array([t0, p0, best_off]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 6000, "maxfev": 9000},
    )
    if res.fun <= best_obj:
        return float(res.fun), _spherical(res.x), float(res.x[2])
    return best_obj, best_dir, best_off


def sdf_objective(normal, offset, points, values, weights) -> float:
    r = points @ normal + offset - values
    return float((weights * r) @ r)


def oracle_fit_sdf(points, values, weights=None, grid=20000):
    """Sphere-grid + polish minimum of the weighted SDF objective.

    The per-direction optimal offset is the weighted mean residual shift
    (s_mean - n.p_mean). Returns (objective, normal, offset).
    """
    from scipy.optimize import minimize

    if weights is None:
        weights = np.ones(points.shape[0])
    wsum = weights.sum()
    p_mean = (weights @ points) / wsum
    s_mean = float(weights @ values) / wsum
    dirs = fibonacci_sphere(grid)
    offs = s_mean - dirs @ p_mean
    r = dirs @ points.T + offs[:, None] - values[None, :]
    objs = (r * r) @ weights
    k = int(np.argmin(objs))
    # self-check the vectorized scan against the scalar evaluation
    assert abs(sdf_objective(dirs[k], float(offs[k]), points, values, weights) - objs[k]) <= (
        1e-9 * max(1.0, objs[k])
    )
    t0 = math.acos(max(-1.0, min(1.0, dirs[k][2])))
    p0 = math.atan2(dirs[k][1], dirs[k][0])

    def fun(params):
        n = _spherical(params)
        d = s_mean - float(n @ p_mean)
        return sdf_objective(n, d, points, values, weights)

    res = minimize(
        fun,
        np.array([t0, p0]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000, "maxfev": 6000},
    )
    if res.fun <= objs[k]:
        n = _spherical(res.x)
        return float(res.fun), n, s_mean - float(n @ p_mean)
    return float(objs[k]), dirs[k], float(offs[k])


def brute_force_assignment(cost: np.ndarray):
    """Exhaustive minimum-cost one-to-one assignment for matrices up to 6x6."""
    import itertools

    rows, cols = cost.shape
    transposed = rows > cols
    c = cost.T if transposed else cost
    rows, cols = c.shape
    best_total, best_pairs = np.inf, None
    for perm in itertools.permutations(range(cols), rows):
        total = sum(c[i, j] for i, j in enumerate(perm))
        if total < best_total:
            best_total = total
            best_pairs = [(i, j) for i, j in enumerate(perm)]
    if transposed:
        best_pairs = [(j, i) for i, j in best_pairs]
    return float(best_total), sorted(best_pairs)
