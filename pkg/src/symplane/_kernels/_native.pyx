# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Must match symplane._kernels.backend_numpy result-for-result (same tie-break
rules, same inlier comparisons); the test suite cross-checks both backends.
"""

from libc.math cimport acos, fabs, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def reflect_points(const double[::1] normal, double offset, const double[:, ::1] points):
    cdef Py_ssize_t n = points.shape[0], i
    cdef double nx = normal[0], ny = normal[1], nz = normal[2], s
    out_arr = np.empty((n, 3))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        s = 2.0 * (nx * points[i, 0] + ny * points[i, 1] + nz * points[i, 2] + offset)
        out[i, 0] = points[i, 0] - s * nx
        out[i, 1] = points[i, 1] - s * ny
        out[i, 2] = points[i, 2] - s * nz
    return out_arr


def signed_distances(const double[::1] normal, double offset, const double[:, ::1] points):
    cdef Py_ssize_t n = points.shape[0], i
    cdef double nx = normal[0], ny = normal[1], nz = normal[2]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = nx * points[i, 0] + ny * points[i, 1] + nz * points[i, 2] + offset
    return out_arr


def pair_residual_norms(
    const double[::1] normal,
    double offset,
    const double[:, ::1] first,
    const double[:, ::1] second,
):
    cdef Py_ssize_t n = first.shape[0], i
    cdef double nx = normal[0], ny = normal[1], nz = normal[2]
    cdef double s, rx, ry, rz
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        s = 2.0 * (nx * second[i, 0] + ny * second[i, 1] + nz * second[i, 2] + offset)
        rx = first[i, 0] - second[i, 0] + s * nx
        ry = first[i, 1] - second[i, 1] + s * ny
        rz = first[i, 2] - second[i, 2] + s * nz
        out[i] = sqrt(rx * rx + ry * ry + rz * rz)
    return out_arr


def ransac_inlier_counts(
    const double[:, ::1] normals,
    const double[::1] offsets,
    const double[:, ::1] first,
    const double[:, ::1] second,
    double threshold,
):
    cdef Py_ssize_t nk = normals.shape[0], n = first.shape[0], k, i
    cdef double nx, ny, nz, d, s, rx, ry, rz, t2 = threshold * threshold
    cdef cnp.int64_t c
    counts_arr = np.zeros(nk, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    for k in range(nk):
        nx = normals[k, 0]
        ny = normals[k, 1]
        nz = normals[k, 2]
        d = offsets[k]
        c = 0
        for i in range(n):
            s = 2.0 * (nx * second[i, 0] + ny * second[i, 1] + nz * second[i, 2] + d)
            rx = first[i, 0] - second[i, 0] + s * nx
            ry = first[i, 1] - second[i, 1] + s * ny
            rz = first[i, 2] - second[i, 2] + s * nz
            if rx * rx + ry * ry + rz * rz <= t2:
                c += 1
        counts[k] = c
    return counts_arr


def plane_distance_matrix(
    const double[:, ::1] normals,
    const double[::1] offsets,
    double angle_scale,
    double offset_scale,
):
    cdef Py_ssize_t n = normals.shape[0], i, j
    cdef double c, dist
    out_arr = np.empty((n, n))
    cdef double[:, ::1] out = out_arr
    for i in range(n):
        c = fabs(
            normals[i, 0] * normals[i, 0]
            + normals[i, 1] * normals[i, 1]
            + normals[i, 2] * normals[i, 2]
        )
        if c > 1.0:
            c = 1.0
        out[i, i] = acos(c) / angle_scale
        for j in range(i + 1, n):
            c = fabs(
                normals[i, 0] * normals[j, 0]
                + normals[i, 1] * normals[j, 1]
                + normals[i, 2] * normals[j, 2]
            )
            if c > 1.0:
                c = 1.0
            dist = acos(c) / angle_scale + fabs(offsets[i] - offsets[j]) / offset_scale
            out[i, j] = dist
            out[j, i] = dist
    return out_arr


def zbuffer_splat(
    const cnp.int64_t[::1] u,
    const cnp.int64_t[::1] v,
    const double[::1] z,
    int height,
    int width,
):
    cdef Py_ssize_t n = u.shape[0], i
    cdef cnp.int64_t uu, vv
    depth_arr = np.full((height, width), np.nan)
    winner_arr = np.full((height, width), -1, dtype=np.int64)
    cdef double[:, ::1] depth = depth_arr
    cdef cnp.int64_t[:, ::1] winner = winner_arr
    for i in range(n):
        uu = u[i]
        vv = v[i]
        # NaN compares false, so an empty pixel takes the first point; later
        # points must be strictly nearer, matching the fallback's tie rule.
        if not (z[i] >= depth[vv, uu]):
            depth[vv, uu] = z[i]
            winner[vv, uu] = i
    return depth_arr, winner_arr
