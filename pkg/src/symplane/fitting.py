"""Plane estimation.

Two problems live here:

* :func:`fit_reflection_plane` — given corresponding 3D point pairs (p, q)
  that are supposed to be mirror images of each other, find the plane whose
  reflection best maps the second points onto the first, minimizing
  sum_k ||p_k - reflect(q_k)||^2. Closed-form initialization followed by
  damped Gauss-Newton on the unit-normal manifold, with an optional RANSAC
  wrapper for outlier-contaminated pairs.

* :func:`fit_plane_from_sdf` — given points with target signed distances and
  positive weights, minimize sum_k w_k ((n.p_k + d) - s_k)^2 subject to
  ||n|| = 1. The offset is eliminated analytically and the constrained
  normal problem is solved exactly through the eigendecomposition of the
  weighted scatter and 1-D root finding; no iteration over starting points,
  no local minima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateConfigurationError, InsufficientDataError, InvalidInputError
from .geometry import Plane, canonicalize, cloud_diameter, _readonly, _require_finite

__all__ = [
    "PointPairSet",
    "SdfSampleSet",
    "FitConfig",
    "FitReport",
    "fit_reflection_plane",
    "fit_plane_from_sdf",
]


@dataclass(frozen=True, eq=False)
class PointPairSet:
    """Corresponding 3D point pairs (first[k] should mirror second[k])."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.first, dtype=np.float64)
        b = np.ascontiguousarray(self.second, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != 3 or a.shape != b.shape:
            raise InvalidInputError(
                f"point pairs must be two matching (N, 3) arrays, got {a.shape} and {b.shape}"
            )
        _require_finite(a, "first points")
        _require_finite(b, "second points")
        object.__setattr__(self, "first", _readonly(a))
        object.__setattr__(self, "second", _readonly(b))

    def __len__(self):
        return self.first.shape[0]

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.first + self.second)

    def diameter(self) -> float:
        """Diameter of the union of both endpoint sets."""
        return cloud_diameter(np.vstack([self.first, self.second]))


@dataclass(frozen=True, eq=False)
class SdfSampleSet:
    """Points with target signed distances and positive weights."""

    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=np.float64)
        s = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] != s.shape[0]:
            raise InvalidInputError(
                f"samples must be (N, 3) points with (N,) values, got {p.shape} and {s.shape}"
            )
        _require_finite(p, "sample points")
        _require_finite(s, "sample values")
        if self.weights is None:
            w = np.ones(p.shape[0])
        else:
            w = np.ascontiguousarray(self.weights, dtype=np.float64).reshape(-1)
            if w.shape != s.shape:
                raise InvalidInputError(f"weights shape {w.shape} does not match values {s.shape}")
            _require_finite(w, "sample weights")
            if p.shape[0] and w.min() <= 0.0:
                raise InvalidInputError("sample weights must be positive")
        object.__setattr__(self, "points", _readonly(p))
        object.__setattr__(self, "values", _readonly(s))
        object.__setattr__(self, "weights", _readonly(w))

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class FitConfig:
    """Options for fit_reflection_plane.

    RANSAC is off by default; pipelines working on matcher output enable it.
    `inlier_threshold` is in scene units; None means 1% of the pair-set
    diameter. `rng` seeds hypothesis sampling so robust fits replay exactly.
    """

    max_iterations: int = 50
    step_tolerance: float = 1e-12
    degeneracy_scale: float = 1e-6
    ransac: bool = False
    ransac_iterations: int = 256
    inlier_threshold: float | None = None
    rng: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.max_iterations < 1 or self.ransac_iterations < 1:
            raise InvalidInputError("iteration counts must be >= 1")
        if self.step_tolerance <= 0 or self.degeneracy_scale <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.inlier_threshold is not None and self.inlier_threshold <= 0:
            raise InvalidInputError("inlier_threshold must be positive")


@dataclass(frozen=True, eq=False)
class FitReport:
    """Result of a plane fit.

    rms_residual is sqrt(mean squared residual) over the inliers; without
    RANSAC every input counts as an inlier. For the SDF fit the residuals are
    weighted and the rms corresponds to the signed minimizer, while `plane`
    is its canonical representative (same geometric plane, possibly flipped
    parameter signs).
    """

    plane: Plane
    rms_residual: float
    inlier_count: int
    iterations: int


# ---------------------------------------------------------------------------
# reflection-plane fit


def _objective(normal, offset, first, second) -> float:
    r = _kernels.pair_residual_norms(normal, offset, first, second)
    return float(r @ r)


def _tangent_basis(n: np.ndarray) -> np.ndarray:
    """Orthonormal (3, 2) basis of the plane orthogonal to unit n."""
    e = np.zeros(3)
    e[int(np.argmin(np.abs(n)))] = 1.0
    b1 = e - (e @ n) * n
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(n, b1)
    return np.column_stack([b1, b2])


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _init_normal(diffs: np.ndarray, norms: np.ndarray, usable: np.ndarray) -> np.ndarray:
    unit = diffs[usable] / norms[usable, None]
    # principal direction of the difference vectors; sign-free by construction
    scatter = unit.T @ unit
    _, vecs = np.linalg.eigh(scatter)
    return vecs[:, -1]


def _refine(first, second, n, d, config):
    """Damped Gauss-Newton on (tangent chart of n, d).

    Returns (n, d, iterations, objective_history); the history is
    non-increasing by construction (steps are halved until they improve).
    """
    obj = _objective(n, d, first, second)
    history = [obj]
    iterations = 0
    for _ in range(config.max_iterations):
        iterations += 1
        basis = _tangent_basis(n)
        s = second @ n + d
        # d r_k / d n = 2 (n q_k^T + s_k I), chained through the chart basis
        jac_n = 2.0 * (np.einsum("i,kj->kij", n, second) + s[:, None, None] * np.eye(3))
        jac = np.empty((first.shape[0], 3, 3))
        jac[:, :, :2] = jac_n @ basis
        jac[:, :, 2] = 2.0 * n
        residuals = first - second + 2.0 * s[:, None] * n[None, :]
        step, *_ = np.linalg.lstsq(
            jac.reshape(-1, 3), -residuals.reshape(-1), rcond=None
        )
        step_norm = float(np.linalg.norm(step))
        if not math.isfinite(step_norm):
            break
        scale = 1.0
        improved = False
        for _ in range(24):
            cand_n = _normalize(n + basis @ (scale * step[:2]))
            cand_d = d + scale * step[2]
            cand_obj = _objective(cand_n, cand_d, first, second)
            if cand_obj <= obj:
                n, d, obj = cand_n, cand_d, cand_obj
                improved = True
                break
            scale *= 0.5
        history.append(obj)
        if not improved or step_norm < config.step_tolerance:
            break
    return n, d, iterations, history


def _fit_pairs_once(first, second, config, diameter):
    """Initialization + refinement on one pair subset. Raises on degeneracy."""
    count = first.shape[0]
    if count == 0:
        raise InsufficientDataError("no point pairs")
    diffs = first - second
    norms = np.linalg.norm(diffs, axis=1)
    usable = norms >= config.degeneracy_scale * diameter
    if not usable.any():
        raise DegenerateConfigurationError(
            "all pairs are self-symmetric (points on the plane); "
            "the reflection plane is underdetermined"
        )
    if int(usable.sum()) < 3:
        raise InsufficientDataError(
            f"only {int(usable.sum())} of {count} pairs carry normal information, need 3"
        )
    n = _init_normal(diffs, norms, usable)
    d = -float(n @ (0.5 * (first + second)).mean(axis=0))
    return _refine(first, second, n, d, config)


def fit_reflection_plane(pairs: PointPairSet, config: FitConfig | None = None) -> FitReport:
    """Fit the reflection plane mapping pairs.second onto pairs.first.

    Minimizes sum_k ||first_k - reflect(second_k)||^2. The normal is
    initialized from the principal direction of the pair difference vectors
    (exact on noiseless data), the offset from the mean midpoint, and both
    are refined by damped Gauss-Newton with the normal constrained to the
    unit sphere through a 2-parameter tangent chart.

    With config.ransac, 3-pair hypotheses are sampled, scored by the number
    of pairs within the inlier threshold, and the best consensus set is
    refit; the report's inlier_count and rms_residual then refer to the
    final plane's inliers. Raises InsufficientDataError below 3 usable
    pairs and DegenerateConfigurationError when every pair is
    self-symmetric.
    """
    if config is None:
        config = FitConfig()
    first, second = pairs.first, pairs.second
    count = len(pairs)
    if count == 0:
        raise InsufficientDataError("no point pairs")
    diameter = pairs.diameter()
    if diameter <= 0.0:
        raise DegenerateConfigurationError("all pair endpoints coincide")
    if not config.ransac:
        n, d, iterations, _ = _fit_pairs_once(first, second, config, diameter)
        residuals = _kernels.pair_residual_norms(n, d, first, second)
        plane = canonicalize(n, d)
        return FitReport(
            plane=plane,
            rms_residual=float(np.sqrt((residuals @ residuals) / count)),
            inlier_count=count,
            iterations=iterations,
        )

    diffs = first - second
    norms = np.linalg.norm(diffs, axis=1)
    usable = np.nonzero(norms >= config.degeneracy_scale * diameter)[0]
    if usable.size == 0:
        raise DegenerateConfigurationError(
            "all pairs are self-symmetric; the reflection plane is underdetermined"
        )
    if usable.size < 3:
        raise InsufficientDataError(
            f"only {usable.size} of {count} pairs carry normal information, need 3"
        )
    threshold = config.inlier_threshold
    if threshold is None:
        threshold = 0.01 * diameter
    rng = config.rng if config.rng is not None else np.random.Generator(np.random.Philox(0))

    hypotheses = config.ransac_iterations
    picks = np.empty((hypotheses, 3), dtype=np.int64)
    for i in range(hypotheses):
        picks[i] = rng.choice(usable, size=3, replace=False)
    unit = diffs[picks] / norms[picks, None]  # (H, 3, 3)
    scatter = np.einsum("hkj,hkl->hjl", unit, unit)
    _, vecs = np.linalg.eigh(scatter)
    normals = vecs[:, :, -1]  # (H, 3) principal eigenvectors
    mids = 0.5 * (first[picks] + second[picks]).mean(axis=1)
    offsets = -np.einsum("hj,hj->h", normals, mids)
    counts = _kernels.ransac_inlier_counts(normals, offsets, first, second, threshold)
    best = int(np.argmax(counts))
    residuals = _kernels.pair_residual_norms(normals[best], offsets[best], first, second)
    consensus = residuals <= threshold
    if int(consensus.sum()) < 3:
        raise InsufficientDataError(
            f"best consensus has {int(consensus.sum())} pairs, need 3; "
            "inlier threshold may be too tight or the pairs carry no common plane"
        )
    n, d, iterations, _ = _fit_pairs_once(first[consensus], second[consensus], config, diameter)
    # inliers are re-evaluated against the refined plane
    residuals = _kernels.pair_residual_norms(n, d, first, second)
    inliers = residuals <= threshold
    inlier_count = int(inliers.sum())
    r_in = residuals[inliers]
    rms = float(np.sqrt((r_in @ r_in) / inlier_count)) if inlier_count else float("nan")
    return FitReport(
        plane=canonicalize(n, d),
        rms_residual=rms,
        inlier_count=inlier_count,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# SDF plane fit


def _secular_root(lam: np.ndarray, beta: np.ndarray, bnorm: float) -> tuple[float, int]:
    """Root t* > 0 of h(t) = sum_i beta_i^2 / (lam_i - lam_0 + t)^2 = 1.

    h is strictly decreasing on t > 0 with h(max(|beta_0|, 0+)) >= 1 and
    h(||beta||) <= 1, so a safeguarded Newton iteration starting inside the
    bracket converges; bisection catches any step leaving it.
    """
    gaps = lam - lam[0]

    def h_and_slope(t):
        den = gaps + t
        frac = beta / den
        h = float(frac @ frac)
        slope = float(-2.0 * (frac * frac / den).sum())
        return h, slope

    lo = max(abs(beta[0]), 1e-300)
    hi = max(bnorm, lo)
    t = min(max(bnorm * 0.5, lo), hi)
    iterations = 0
    for _ in range(200):
        iterations += 1
        h, slope = h_and_slope(t)
        if abs(h - 1.0) <= 1e-15:
            break
        if h > 1.0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        if slope == 0.0:
            t = 0.5 * (lo + hi)
            continue
        t_new = t - (h - 1.0) / slope
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-17 * max(1.0, abs(t)):
            t = t_new
            break
        t = t_new
    return t, iterations


def fit_plane_from_sdf(samples: SdfSampleSet) -> FitReport:
    """Fit the plane whose signed distances best match the sample values.

    Minimizes sum_k w_k ((n.p_k + d) - s_k)^2 with ||n|| = 1, exactly. For a
    fixed normal the optimal offset is the weighted residual mean, which
    reduces the problem to minimizing n.A n - 2 b.n on the unit sphere; that
    is solved through the eigendecomposition of A plus a 1-D secular root,
    so exact inputs reproduce their plane to machine precision.

    The returned plane is the canonical representative; rms_residual is
    evaluated at the signed minimizer (the two differ only in parameter
    signs, not in geometry). Raises InsufficientDataError for fewer than 4
    samples and DegenerateConfigurationError for (near-)collinear points.
    """
    count = len(samples)
    if count < 4:
        raise InsufficientDataError(f"need at least 4 SDF samples, got {count}")
    p, s, w = samples.points, samples.values, samples.weights
    wsum = float(w.sum())
    p_mean = (w @ p) / wsum
    s_mean = float(w @ s) / wsum
    pc = p - p_mean
    sc = s - s_mean
    scatter = (w[:, None] * pc).T @ pc
    b = (w * sc) @ pc

    lam, vecs = np.linalg.eigh(scatter)
    scale = max(lam[-1], 0.0)
    if scale <= 0.0 or lam[1] <= 1e-12 * scale:
        raise DegenerateConfigurationError(
            "sample points are (near-)collinear; the plane normal is underdetermined"
        )
    beta = vecs.T @ b
    bnorm = float(np.linalg.norm(b))
    iterations = 0

    if bnorm <= 1e-14 * scale:
        # values carry no gradient: minimize n.A n alone
        n = vecs[:, 0]
    elif abs(beta[0]) <= 1e-14 * bnorm:
        gaps = lam[1:] - lam[0]
        coeff = beta[1:] / gaps
        interior = float(coeff @ coeff)
        if interior <= 1.0:
            # hard case: the minimizer has a free component along the bottom
            # eigenvector, fixed only up to sign by the unit constraint
            n = vecs[:, 1:] @ coeff + math.sqrt(max(0.0, 1.0 - interior)) * vecs[:, 0]
        else:
            t, iterations = _secular_root(lam, beta, bnorm)
            n = vecs @ (beta / (lam - lam[0] + t))
    else:
        t, iterations = _secular_root(lam, beta, bnorm)
        n = vecs @ (beta / (lam - lam[0] + t))

    n = _normalize(n)
    d = s_mean - float(n @ p_mean)
    residuals = p @ n + d - s
    rms = float(np.sqrt((w * residuals) @ residuals / wsum))
    return FitReport(
        plane=canonicalize(n, d),
        rms_residual=rms,
        inlier_count=count,
        iterations=iterations,
    )
