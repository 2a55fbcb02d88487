"""Pure-numpy implementations of the hot kernels.

This backend is always importable and is the reference for the compiled
module: both must agree on every kernel to floating-point roundoff. Inputs
are contiguous float64/int64 arrays; the dispatch wrappers in
``symplane._kernels`` take care of coercion.
"""

from __future__ import annotations

import numpy as np


def reflect_points(normal, offset, points):
    """Reflect points (N,3) across the plane (normal, offset)."""
    s = points @ normal + offset
    return points - 2.0 * s[:, None] * normal[None, :]


def signed_distances(normal, offset, points):
    """Signed distances (N,) of points to the plane."""
    return points @ normal + offset


def pair_residual_norms(normal, offset, first, second):
    """Norms ||first_k - reflect(second_k)|| for paired points (N,3)/(N,3)."""
    s = second @ normal + offset
    r = first - second + 2.0 * s[:, None] * normal[None, :]
    return np.sqrt(np.einsum("ij,ij->i", r, r))


def ransac_inlier_counts(normals, offsets, first, second, threshold):
    """Inlier counts (K,) for K plane hypotheses scored over N point pairs.

    A pair is an inlier of hypothesis k when
    ||first - reflect_k(second)|| <= threshold.
    """
    k = normals.shape[0]
    n = first.shape[0]
    counts = np.empty(k, dtype=np.int64)
    if n == 0:
        counts[:] = 0
        return counts
    diff = first - second
    # Block over hypotheses to keep the (N,B,3) temporary bounded (~32 MB).
    block = max(1, int(1_400_000 // n))
    for lo in range(0, k, block):
        nb = normals[lo : lo + block]
        s = second @ nb.T + offsets[lo : lo + block][None, :]
        r = diff[:, None, :] + 2.0 * s[:, :, None] * nb[None, :, :]
        norms2 = np.einsum("nbj,nbj->nb", r, r)
        counts[lo : lo + block] = (norms2 <= threshold * threshold).sum(axis=0)
    return counts


def plane_distance_matrix(normals, offsets, angle_scale, offset_scale):
    """Pairwise plane pseudometric matrix (N,N) over canonical planes."""
    c = np.abs(normals @ normals.T)
    np.clip(c, 0.0, 1.0, out=c)
    ang = np.arccos(c)
    off = np.abs(offsets[:, None] - offsets[None, :])
    return ang / angle_scale + off / offset_scale


def zbuffer_splat(u, v, z, height, width):
    """Scatter depths into a (height, width) grid keeping the nearest point.

    Returns (depth, winner): depth holds the smallest z per pixel (NaN where
    nothing landed), winner the index of that point (-1 where empty). Ties in
    z keep the lowest point index. Callers pass in-bounds pixels only.
    """
    depth = np.full((height, width), np.nan)
    winner = np.full((height, width), -1, dtype=np.int64)
    if u.shape[0] == 0:
        return depth, winner
    flat = v * np.int64(width) + u
    # lexsort is stable with the last key primary: order by (pixel, z) and
    # keep the first entry per pixel; equal z falls back to point order.
    order = np.lexsort((z, flat))
    flat_sorted = flat[order]
    first = np.ones(order.shape[0], dtype=bool)
    first[1:] = flat_sorted[1:] != flat_sorted[:-1]
    sel = order[first]
    depth.ravel()[flat_sorted[first]] = z[sel]
    winner.ravel()[flat_sorted[first]] = sel
    return depth, winner
