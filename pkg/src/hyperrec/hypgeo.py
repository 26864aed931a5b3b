"""Numerical kernels for the Poincare ball and Klein models (curvature -1).

All functions are pure and accept either a single point (1-d array) or a
stack of points (2-d array, one point per row) where noted.  Reductions
are carried out in a canonical order so results are bit-reproducible.
"""

import numpy as np

from .exceptions import EmptyInput
from .validation import (
    DEFAULT_CLAMP_EPS,
    check_clamp_eps,
    check_in_ball,
    check_points,
    check_same_dim,
    check_square,
    check_vector,
    clamp_rows,
    klein_radius_limit,
)

__all__ = [
    "acosh1p",
    "poincare_distance",
    "pairwise_poincare_distances",
    "poincare_to_klein",
    "klein_to_poincare",
    "lorentz_factor",
    "einstein_midpoint",
    "hyperbolic_average",
    "similarity_from_distances",
]

DEGENERATE_RANGE = 1e-12


def acosh1p(z):
    """``acosh(1 + z)`` for ``z >= 0`` without cancellation near zero."""
    z = np.asarray(z, dtype=np.float64)
    return np.log1p(z + np.sqrt(z * (z + 2.0)))


def poincare_distance(x, y):
    """Geodesic distance between two points of the Poincare ball.

    ``acosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))``, evaluated through
    :func:`acosh1p` so that nearly coincident points keep full precision.
    """
    x = check_vector(x, "x")
    y = check_vector(y, "y")
    check_same_dim(x, y)
    sx = float(check_in_ball(x, "x"))
    sy = float(check_in_ball(y, "y"))
    diff = x - y
    z = 2.0 * float(np.dot(diff, diff)) / ((1.0 - sx) * (1.0 - sy))
    return float(acosh1p(z))


def pairwise_poincare_distances(X, Y=None, chunk_rows=256):
    """Distance matrix between the rows of ``X`` and the rows of ``Y``.

    With ``Y`` omitted the result is the exactly symmetric self-distance
    matrix of ``X`` with a zero diagonal.  Rows are processed in chunks so
    memory stays at ``chunk_rows * len(Y) * d`` floats.
    """
    X = check_points(X, "X")
    sym = Y is None
    Y = X if sym else check_points(Y, "Y")
    check_same_dim(X, Y)
    sx = check_in_ball(X, "X")
    sy = check_in_ball(Y, "Y")
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], chunk_rows):
        stop = min(start + chunk_rows, X.shape[0])
        diff = X[start:stop, None, :] - Y[None, :, :]
        sq = np.sum(diff * diff, axis=-1)
        denom = (1.0 - sx[start:stop])[:, None] * (1.0 - sy)[None, :]
        out[start:stop] = acosh1p(2.0 * sq / denom)
    if sym:
        upper = np.triu(out, 1)
        out = upper + upper.T
    return out


def _as_rows(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return check_vector(arr)[None, :], True
    return check_points(arr), False


def poincare_to_klein(x, clamp_eps=DEFAULT_CLAMP_EPS):
    """Map Poincare coordinates to Klein coordinates: ``2x / (1 + |x|^2)``."""
    rows, single = _as_rows(x)
    sq = check_in_ball(rows)
    out = 2.0 * rows / (1.0 + sq)[:, None]
    out, _ = clamp_rows(out, klein_radius_limit(check_clamp_eps(clamp_eps)))
    return out[0] if single else out


def klein_to_poincare(x, clamp_eps=DEFAULT_CLAMP_EPS):
    """Map Klein coordinates to Poincare coordinates: ``x / (1 + sqrt(1 - |x|^2))``."""
    rows, single = _as_rows(x)
    sq = check_in_ball(rows)
    out = rows / (1.0 + np.sqrt(1.0 - sq))[:, None]
    out, _ = clamp_rows(out, 1.0 - check_clamp_eps(clamp_eps))
    return out[0] if single else out


def lorentz_factor(x):
    """Lorentz factor ``1 / sqrt(1 - |x|^2)`` of Klein point(s)."""
    rows, single = _as_rows(x)
    sq = check_in_ball(rows)
    gamma = 1.0 / np.sqrt(1.0 - sq)
    return float(gamma[0]) if single else gamma


def _canonical_order(points):
    # Lexicographic on coordinates, first column most significant.
    return points[np.lexsort(points.T[::-1])]


def einstein_midpoint(points, clamp_eps=DEFAULT_CLAMP_EPS):
    """Lorentz-factor weighted mean of Klein points.

    Points are sorted into canonical order before summation, so the result
    does not depend on the order they were supplied in.
    """
    pts = check_points(points)
    check_in_ball(pts)
    if pts.shape[0] == 1:
        return pts[0].copy()
    pts = _canonical_order(pts)
    gamma = lorentz_factor(pts)
    mid = np.sum(gamma[:, None] * pts, axis=0) / np.sum(gamma)
    mid, _ = clamp_rows(mid[None, :], klein_radius_limit(check_clamp_eps(clamp_eps)))
    return mid[0]


def hyperbolic_average(points, clamp_eps=DEFAULT_CLAMP_EPS):
    """Einstein midpoint of Poincare points, returned in Poincare coordinates."""
    pts = check_points(points)
    if pts.shape[0] == 1:
        check_in_ball(pts)
        return pts[0].copy()
    klein = poincare_to_klein(pts, clamp_eps)
    return klein_to_poincare(einstein_midpoint(klein, clamp_eps), clamp_eps)


def similarity_from_distances(distances):
    """Min-max scale a distance matrix to [0, 1] and flip it into similarities.

    The min and max run over the whole matrix (diagonal included).  A
    matrix with no spread maps to all ones.
    """
    D = check_square(distances, "distances")
    if D.size == 0:
        raise EmptyInput("distance matrix is empty")
    lo = float(D.min())
    span = float(D.max()) - lo
    if span < DEGENERATE_RANGE:
        return np.ones_like(D)
    return 1.0 - (D - lo) / span
