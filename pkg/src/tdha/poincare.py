"""Curvature -1 Poincare-ball geometry.

Points and tangent vectors are numpy arrays whose last axis is the feature
dimension; every function broadcasts over leading axes. All arithmetic runs
in float64 regardless of input dtype: distance terms next to the ball
boundary lose too much precision in float32.

The ball is the open unit ball. Constructive operations (``exp_map_origin``,
``clip_to_ball``) clamp their output to norm <= 1 - 1e-6 so that the
(1 - ||a||^2) factors inside the distance never underflow; read-only
operations accept any point strictly inside the unit ball.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, DomainError, InvalidInputError

# Hard cap applied by constructive operations.
BALL_MAX_NORM = 1.0 - 1e-6

# Below this, acosh(1+x) switches to its series to avoid cancellation.
_ACOSH_SERIES_CUTOFF = 1e-8


def _as_float64(x, name: str = "input") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise InvalidInputError(f"{name} must be a vector with at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _checked_point(x, name: str = "point") -> np.ndarray:
    arr = _as_float64(x, name)
    if np.any(np.sum(arr * arr, axis=-1) >= 1.0):
        raise DomainError(f"{name} must lie strictly inside the unit ball")
    return arr


def _stack_points(points, name: str = "points") -> np.ndarray:
    if isinstance(points, np.ndarray):
        if points.size == 0:
            raise InvalidInputError(f"{name} must be nonempty")
        pts = points if points.ndim == 2 else np.atleast_2d(points)
    else:
        seq = list(points)
        if not seq:
            raise InvalidInputError(f"{name} must be nonempty")
        pts = np.stack([np.asarray(p, dtype=np.float64) for p in seq])
    return _checked_point(pts, name)


def clip_to_ball(x) -> np.ndarray:
    """Rescale any point with norm > 1 - 1e-6 back onto that radius."""
    arr = _as_float64(x)
    norm = np.linalg.norm(arr, axis=-1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    scale = np.where(norm > BALL_MAX_NORM, BALL_MAX_NORM / safe, 1.0)
    return arr * scale


def exp_map_origin(w) -> np.ndarray:
    """Map a tangent vector at the origin into the ball: tanh(||w||) * w/||w||.

    The zero vector maps to the origin (continuous limit). Output is clamped
    to norm <= 1 - 1e-6, so arbitrarily large inputs saturate just inside
    the boundary instead of landing on it.
    """
    w = _as_float64(w, "tangent vector")
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    return clip_to_ball(np.tanh(norm) / safe * w)


def log_map_origin(y) -> np.ndarray:
    """Inverse of ``exp_map_origin``: artanh(||y||) * y/||y||."""
    y = _checked_point(y)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    safe = np.where(norm > 0.0, norm, 1.0)
    return np.arctanh(norm) / safe * y


def _acosh1p(x: np.ndarray) -> np.ndarray:
    """acosh(1 + x) for x >= 0, stable near zero.

    acosh(1+x) = ln(1 + x + sqrt(x^2 + 2x)) cancels catastrophically for
    tiny x; below the cutoff use the series sqrt(2x) * (1 - x/12).
    """
    x = np.asarray(x, dtype=np.float64)
    small = x < _ACOSH_SERIES_CUTOFF
    xs = np.where(small, 0.0, x)
    direct = np.log1p(xs + np.sqrt(xs * (xs + 2.0)))
    series = np.sqrt(2.0 * x) * (1.0 - x / 12.0)
    return np.where(small, series, direct)


def distance(a, b) -> np.ndarray:
    """Poincare distance acosh(1 + 2||a-b||^2 / ((1-||a||^2)(1-||b||^2)))."""
    a = _checked_point(a, "first point")
    b = _checked_point(b, "second point")
    diff = a - b
    num = 2.0 * np.sum(diff * diff, axis=-1)
    denom = (1.0 - np.sum(a * a, axis=-1)) * (1.0 - np.sum(b * b, axis=-1))
    return _acosh1p(num / denom)


def conformal_factor(a) -> np.ndarray:
    """Metric scaling factor (1 - ||a||^2)^-1 at a point of the ball.

    Standalone value only: the distance above is computed directly and does
    not go through this factor.
    """
    a = _checked_point(a)
    return 1.0 / (1.0 - np.sum(a * a, axis=-1))


def ambient_mean(points) -> np.ndarray:
    """Coordinate-wise arithmetic mean of ball points (stays inside by convexity)."""
    pts = _stack_points(points)
    return np.mean(pts, axis=0)


def tangent_mean(points) -> np.ndarray:
    """First-order surrogate of the Frechet mean: exp_0(mean(log_0(x_i)))."""
    pts = _stack_points(points)
    return exp_map_origin(np.mean(log_map_origin(pts), axis=0))


def _squared_distance_gradient(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Euclidean gradient of mean_i d(z, x_i)^2 at z."""
    az = 1.0 - np.sum(z * z)
    ax = 1.0 - np.sum(pts * pts, axis=-1)
    diff = z - pts
    sq = np.sum(diff * diff, axis=-1)
    u = 2.0 * sq / (az * ax)
    # d/du acosh(1+u)^2 = 2*acosh(1+u)/sqrt(u(u+2)); -> 2 as u -> 0.
    g = np.where(u > 1e-14, 2.0 * _acosh1p(u) / np.sqrt(np.maximum(u * (u + 2.0), 1e-300)), 2.0)
    du_dz = (4.0 / (ax * az))[:, None] * diff + (4.0 * sq / (ax * az * az))[:, None] * z
    return np.mean(g[:, None] * du_dz, axis=0)


def frechet_mean_oracle(points, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Minimizer of the total squared geodesic distance to ``points``.

    Preconditioned gradient iteration started at the tangent-space mean;
    stops when the update norm drops below ``tol``. Reference implementation
    for validating ``tangent_mean``; not part of the inference path.
    """
    pts = _stack_points(points)
    z = tangent_mean(pts)
    residual = np.inf
    for _ in range(max_iter):
        grad = _squared_distance_gradient(z, pts)
        # Inverse-metric scaling keeps the step well conditioned near the boundary.
        step = -0.5 * ((1.0 - np.sum(z * z)) ** 2 / 4.0) * grad
        z = clip_to_ball(z + step)
        residual = float(np.linalg.norm(step))
        if residual < tol:
            return z
    raise ConvergenceError(
        f"Frechet mean did not converge within {max_iter} iterations", residual=residual
    )
