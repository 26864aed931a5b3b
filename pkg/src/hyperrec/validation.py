"""Input validation helpers for ball-model coordinates and matrices."""

import numpy as np

from .exceptions import DimensionError, DomainError, EmptyInput

DEFAULT_CLAMP_EPS = 1e-5


def check_vector(x, name="x"):
    """Return ``x`` as a finite 1-d float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} has zero length")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite coordinates")
    return arr


def check_points(points, name="points"):
    """Return ``points`` as a finite (n, d) float64 array with n >= 1.

    Accepts a 2-d array or any sequence of equal-length vectors; mixed
    lengths raise ``DimensionError``.
    """
    if isinstance(points, np.ndarray):
        arr = points.astype(np.float64, copy=False)
    else:
        rows = list(points)
        if not rows:
            raise EmptyInput(f"{name} is empty")
        lengths = {len(np.atleast_1d(r)) for r in rows}
        if len(lengths) != 1:
            raise DimensionError(f"{name} have mixed dimensionality {sorted(lengths)}")
        arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite coordinates")
    return arr


def check_same_dim(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


def check_in_ball(arr, name="x"):
    """Raise ``DomainError`` unless every row of ``arr`` has norm < 1."""
    sq = np.sum(arr * arr, axis=-1)
    if np.any(sq >= 1.0):
        raise DomainError(f"{name} lies on or outside the unit ball (norm >= 1)")
    return sq


def check_clamp_eps(clamp_eps):
    if not 0.0 < clamp_eps < 1.0:
        raise DomainError(f"clamp_eps must lie in (0, 1), got {clamp_eps}")
    return float(clamp_eps)


def klein_radius_limit(clamp_eps=DEFAULT_CLAMP_EPS):
    """Klein-model norm of a Poincare point sitting at radius ``1 - clamp_eps``.

    Klein coordinates crowd the boundary quadratically, so the Poincare
    clamp radius is translated rather than reused.
    """
    r = 1.0 - clamp_eps
    return 2.0 * r / (1.0 + r * r)


def clamp_rows(arr, max_norm):
    """Radially rescale rows whose norm is >= ``max_norm`` onto that norm.

    Returns the clamped copy and the number of rows touched.
    """
    arr = np.array(arr, dtype=np.float64)
    flat = arr.reshape(-1, arr.shape[-1])
    norms = np.sqrt(np.sum(flat * flat, axis=1))
    over = norms >= max_norm
    if np.any(over):
        flat[over] *= (max_norm / norms[over])[:, None]
    return flat.reshape(arr.shape), int(np.count_nonzero(over))


def check_square(mat, name="matrix"):
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError(f"{name} has non-finite entries")
    return mat
