"""Dense matrix primitives used throughout the package.

Matrices are plain ``numpy.ndarray`` objects with float64 entries. The
helpers here add the error discipline the rest of the code relies on:
shape checks raise :class:`~lieobs.errors.DimensionError`, non-finite
input raises :class:`~lieobs.errors.DomainError`, and near-singular input
raises :class:`~lieobs.errors.SingularityError` instead of silently
returning garbage.

All inner products and norms are Frobenius. The matrix exponential is a
scaling-and-squaring Taylor evaluation accurate to roughly 1e-13 relative
error for inputs with norm up to about ten, which covers every algebra
element this package produces.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegeneracyError, DimensionError, DomainError, SingularityError

__all__ = [
    "frob_inner",
    "frob_norm",
    "mat_exp",
    "mat_inv",
    "polar_so3",
    "singular_extremes",
]

_EXP_MAX_TERMS = 40


def _as_matrix(a, name: str = "a") -> np.ndarray:
    """Coerce to a float64 2-D array, checking shape and finiteness."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains non-finite entries")
    return m


def _as_square(a, name: str = "a") -> np.ndarray:
    m = _as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def frob_inner(a, b) -> float:
    """Frobenius inner product ``trace(a^T b)``.

    Parameters
    ----------
    a, b : array_like
        Matrices of identical shape.

    Returns
    -------
    float
    """
    am = np.asarray(a, dtype=float)
    bm = np.asarray(b, dtype=float)
    if am.shape != bm.shape:
        raise DimensionError(
            f"frob_inner needs matching shapes, got {am.shape} and {bm.shape}"
        )
    return float(np.vdot(am, bm))


def frob_norm(a) -> float:
    """Frobenius norm, the square root of ``frob_inner(a, a)``."""
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    The argument is halved until its Frobenius norm is at most 1/2, the
    Taylor series is summed to machine precision, and the result is
    squared back up.

    Parameters
    ----------
    a : array_like
        Square matrix.

    Returns
    -------
    numpy.ndarray
        ``exp(a)``, same shape as ``a``.
    """
    m = _as_square(a)
    n = m.shape[0]
    nrm = float(np.linalg.norm(m))
    s = 0
    if nrm > 0.5:
        s = int(math.ceil(math.log2(nrm / 0.5)))
        m = m / (2.0**s)

    acc = np.eye(n) + m
    term = m
    for k in range(2, _EXP_MAX_TERMS + 1):
        term = term @ m / k
        acc = acc + term
        if np.linalg.norm(term) <= 1e-17 * np.linalg.norm(acc):
            break

    for _ in range(s):
        acc = acc @ acc
    return acc


def singular_extremes(a) -> tuple[float, float]:
    """Smallest and largest singular values of a matrix.

    Returns
    -------
    (sigma_min, sigma_max) : tuple of float
    """
    m = _as_matrix(a)
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1]), float(sv[0])


def mat_inv(a, rel_tol: float = 1e-10) -> np.ndarray:
    """Inverse of a square matrix with an explicit conditioning guard.

    Parameters
    ----------
    a : array_like
        Square matrix.
    rel_tol : float
        Reject the matrix when ``sigma_min <= rel_tol * sigma_max``.

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    SingularityError
        If the matrix is singular or the singular value ratio falls at or
        below ``rel_tol``.
    """
    m = _as_square(a)
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        smin, _ = singular_extremes(m)
        raise SingularityError(
            f"matrix is singular (sigma_min={smin:.3e})", sigma_min=smin
        ) from None
    if not np.all(np.isfinite(inv)):
        smin, _ = singular_extremes(m)
        raise SingularityError(
            f"matrix inverse overflowed (sigma_min={smin:.3e})", sigma_min=smin
        )
    # 1/(||a||_F ||a^-1||_F) lower-bounds sigma_min/sigma_max, so a clearly
    # well conditioned matrix never pays for an SVD here.
    denom = float(np.linalg.norm(m)) * float(np.linalg.norm(inv))
    if denom > 0.0 and 1.0 / denom > rel_tol:
        return inv
    smin, smax = singular_extremes(m)
    if smin <= rel_tol * smax:
        raise SingularityError(
            f"matrix is numerically singular (sigma_min={smin:.3e}, "
            f"sigma_max={smax:.3e}, rel_tol={rel_tol:.1e})",
            sigma_min=smin,
        )
    return inv


def polar_so3(a) -> np.ndarray:
    """Special orthogonal polar factor of a 3x3 matrix.

    Computes the rotation nearest to ``a`` in the Frobenius sense via the
    SVD, with the usual determinant correction so the result lands in
    SO(3) rather than O(3).

    Parameters
    ----------
    a : array_like
        3x3 matrix of full rank.

    Returns
    -------
    numpy.ndarray
        Rotation matrix.

    Raises
    ------
    DegeneracyError
        If the matrix is rank deficient, in which case no well defined
        nearest rotation exists.
    """
    m = _as_square(a)
    if m.shape != (3, 3):
        raise DimensionError(f"polar_so3 expects a 3x3 matrix, got {m.shape}")
    u, sv, vt = np.linalg.svd(m)
    if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
        raise DegeneracyError(
            f"rank-deficient matrix has no polar rotation (sigma_min={sv[-1]:.3e})",
            sigma_min=float(sv[-1]),
        )
    d = float(np.sign(np.linalg.det(u @ vt)))
    return (u * np.array([1.0, 1.0, d])) @ vt
