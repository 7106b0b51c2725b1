"""Similarity alignment, robust averaging, and shape templates.

All point sets are (n, 3) row-vector matrices.  A similarity transform acts
as ``Z = s * X @ R + T`` with a proper rotation (det(R) = +1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    EmptyInput,
    NonPositiveScale,
    ZeroAxisNorm,
)

_RANK_RTOL = 1e-12  # relative singular-value cutoff for rotation ambiguity


def _as_points(x, name="points"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DimensionMismatch(f"{name} must be an (n, 3) matrix, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class SimilarityTransform:
    """Rotation R (3x3), translation T (3,), isotropic scale s > 0."""

    R: np.ndarray
    T: np.ndarray
    s: float

    def __post_init__(self):
        r = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.T, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise DimensionMismatch(f"R must be 3x3, got {r.shape}")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-6 or np.linalg.det(r) < 0:
            raise ValueError("R is not a proper rotation")
        if not self.s > 0:
            raise ValueError("scale must be positive")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "T", t)
        object.__setattr__(self, "s", float(self.s))

    def apply(self, points):
        return self.s * np.asarray(points, dtype=np.float64) @ self.R + self.T


def umeyama(src, dst):
    """Least-squares similarity transform mapping src onto dst.

    Returns the SimilarityTransform minimizing ||s*src@R + T - dst||_F with
    det(R) = +1 enforced via the sign-corrected SVD of the cross-covariance.
    Raises DegenerateConfiguration when the source points leave the rotation
    ambiguous (fewer than 3 points, all coincident, or collinear).
    """
    x = _as_points(src, "src")
    y = _as_points(dst, "dst")
    if x.shape != y.shape:
        raise DimensionMismatch(f"src {x.shape} and dst {y.shape} differ")
    n = x.shape[0]
    if n < 3:
        raise DegenerateConfiguration("need at least 3 points to fix a rotation")

    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    var_x = float(np.sum(xc * xc)) / n
    if var_x == 0.0:
        raise DegenerateConfiguration("source points are all coincident")

    cov = xc.T @ yc / n
    u, sv, vt = np.linalg.svd(cov)
    if sv[1] <= _RANK_RTOL * sv[0]:
        raise DegenerateConfiguration("points are collinear; rotation is ambiguous")
    d = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    signs = np.array([1.0, 1.0, d])
    r = u @ np.diag(signs) @ vt
    s = float(np.sum(sv * signs)) / var_x
    t = mu_y - s * mu_x @ r
    return SimilarityTransform(R=r, T=t, s=s)


def weiszfeld(points, tol=1e-9, max_iter=1000):
    """Geometric median of row vectors with anchor-point handling.

    Starts at the centroid and iterates the reweighted mean; when the iterate
    sits on a data point the update blends in the pull of the remaining
    points and stops if that pull cannot move it.  Returns (median, history)
    where history holds the objective after each iterate, non-increasing.
    """
    pts = np.asarray(points, dtype=np.float64)
    y = pts.mean(axis=0)

    def objective(v):
        return float(np.sum(np.linalg.norm(pts - v, axis=1)))

    history = [objective(y)]
    for _ in range(max_iter):
        dist = np.linalg.norm(pts - y, axis=1)
        at_point = dist == 0.0
        eta = int(np.count_nonzero(at_point))
        inv = np.zeros_like(dist)
        inv[~at_point] = 1.0 / dist[~at_point]
        denom = inv.sum()
        if denom == 0.0:  # every sample equals y
            break
        t_step = (pts * inv[:, None]).sum(axis=0) / denom
        if eta:
            pull = ((pts - y) * inv[:, None]).sum(axis=0)
            r = np.linalg.norm(pull)
            if r <= eta:  # the anchored point is the median
                break
            y_next = max(0.0, 1.0 - eta / r) * t_step + min(1.0, eta / r) * y
        else:
            y_next = t_step
        obj_next = objective(y_next)
        if obj_next > history[-1]:  # no further progress within float noise
            break
        step = np.linalg.norm(y_next - y)
        y = y_next
        history.append(obj_next)
        if step <= tol:
            break
    return y, history


def geometric_median(mats, tol=1e-9, max_iter=1000):
    """Geometric median of a list of equally shaped matrices.

    Each matrix is flattened and treated as one point; the result has the
    input shape.  Raises EmptyInput on an empty list and DimensionMismatch
    when shapes disagree.
    """
    if len(mats) == 0:
        raise EmptyInput("need at least one matrix")
    first = np.asarray(mats[0], dtype=np.float64)
    stack = [first]
    for m in mats[1:]:
        arr = np.asarray(m, dtype=np.float64)
        if arr.shape != first.shape:
            raise DimensionMismatch(
                f"matrix shapes differ: {arr.shape} vs {first.shape}"
            )
        stack.append(arr)
    if len(stack) == 1:
        return first.copy()
    flat = np.stack([m.ravel() for m in stack])
    y, _ = weiszfeld(flat, tol=tol, max_iter=max_iter)
    return y.reshape(first.shape)


@dataclass(frozen=True)
class AxisScales:
    """Per-axis least-squares scales (s_x, s_y, s_z), all positive."""

    s_x: float
    s_y: float
    s_z: float

    def as_array(self):
        return np.array([self.s_x, self.s_y, self.s_z])


def fit_axis_scales(src_median, dst_median):
    """Per-axis scale fit: s_a = <src_a, dst_a> / <src_a, src_a>.

    The one-parameter least-squares solution per coordinate axis.  Raises
    ZeroAxisNorm for an all-zero source column and NonPositiveScale when the
    fitted factor is not positive.
    """
    src = _as_points(src_median, "src_median")
    dst = _as_points(dst_median, "dst_median")
    if src.shape != dst.shape:
        raise DimensionMismatch(f"shapes differ: {src.shape} vs {dst.shape}")
    out = []
    for a, axis_name in enumerate("xyz"):
        denom = float(src[:, a] @ src[:, a])
        if denom == 0.0:
            raise ZeroAxisNorm(f"axis {axis_name} of src_median has zero norm")
        s = float(src[:, a] @ dst[:, a]) / denom
        if s <= 0.0:
            raise NonPositiveScale(f"axis {axis_name} scale {s} is not positive")
        out.append(s)
    return AxisScales(*out)


def _normalize_shape(x):
    centered = x - x.mean(axis=0)
    norm = np.linalg.norm(centered)
    if norm == 0.0:
        raise DegenerateConfiguration("shape has zero spread")
    return centered / norm


def gpa_template(frames, iters=10):
    """Mean shape of a set of (n, 3) frames under similarity alignment.

    Initializes with frame 0 (centered, unit Frobenius norm), then
    alternates aligning every frame to the template and re-normalizing the
    aligned mean.  The result has zero centroid and unit norm.
    """
    if len(frames) == 0:
        raise EmptyInput("need at least one frame")
    mats = [_as_points(f, f"frame {i}") for i, f in enumerate(frames)]
    shape = mats[0].shape
    for i, m in enumerate(mats):
        if m.shape != shape:
            raise DimensionMismatch(f"frame {i} has shape {m.shape}, expected {shape}")
    template = _normalize_shape(mats[0])
    for _ in range(iters):
        aligned = [umeyama(m, template).apply(m) for m in mats]
        template = _normalize_shape(np.mean(aligned, axis=0))
    return template


def procrustes_distance(a, b):
    """Shape dissimilarity after removing translation, scale, and rotation.

    Both sets are centered and scaled to unit norm, optimally rotated onto
    each other, and the Frobenius residual returned.  Zero for sets related
    by a similarity transform.
    """
    an = _normalize_shape(_as_points(a, "a"))
    bn = _normalize_shape(_as_points(b, "b"))
    if an.shape != bn.shape:
        raise DimensionMismatch(f"shapes differ: {an.shape} vs {bn.shape}")
    u, _, vt = np.linalg.svd(an.T @ bn)
    d = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    r = u @ np.diag([1.0, 1.0, d]) @ vt
    return float(np.linalg.norm(an @ r - bn))
