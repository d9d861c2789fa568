"""Dense real linear algebra: pseudoinverses, ranks, orthoprojectors, pivoted selections.

All functions accept anything ``numpy.asarray`` understands and return new
float arrays. Matrices with zero rows or zero columns are legal everywhere.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCE, ToleranceConfig
from .errors import InconsistentRankError, InvalidInputError

logger = logging.getLogger(__name__)


def as_real_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array or raise ``InvalidInputError``."""
    try:
        arr = np.array(M, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not a real matrix: {exc}") from exc
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def as_real_vector(y, name: str = "vector") -> np.ndarray:
    try:
        arr = np.array(y, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not a real vector: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _singular_values(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def _cutoff(s: np.ndarray, tol: ToleranceConfig, scale: float = 0.0) -> float | None:
    """Threshold below which singular values count as zero; None for the zero matrix.

    The reference magnitude is max(σ_max, scale), so a matrix formed by cancellation
    between operands of size ``scale`` has rank 0 when only rounding noise is left.
    """
    reference = max(float(s[0]) if s.size else 0.0, scale)
    if reference == 0.0:
        return None
    return tol.rank_tol_rel * reference


def pseudoinverse(M, tol: ToleranceConfig = DEFAULT_TOLERANCE, scale: float = 0.0) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD, inverting only σ ≥ rank_tol_rel·σ_max."""
    M = as_real_matrix(M)
    rows, cols = M.shape
    if M.size == 0:
        return np.zeros((cols, rows))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = _cutoff(s, tol, scale)
    if cutoff is None:
        return np.zeros((cols, rows))
    keep = s >= cutoff
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def numerical_rank(M, tol: ToleranceConfig = DEFAULT_TOLERANCE, scale: float = 0.0) -> int:
    M = as_real_matrix(M)
    s = _singular_values(M)
    cutoff = _cutoff(s, tol, scale)
    if cutoff is None:
        return 0
    return int(np.count_nonzero(s >= cutoff))


def null_projector(M, tol: ToleranceConfig = DEFAULT_TOLERANCE, scale: float = 0.0) -> np.ndarray:
    """Orthoprojector I - M⁺M onto ker M."""
    M = as_real_matrix(M)
    P = np.eye(M.shape[1]) - pseudoinverse(M, tol, scale) @ M
    return 0.5 * (P + P.T)


def conull_projector(M, tol: ToleranceConfig = DEFAULT_TOLERANCE, scale: float = 0.0) -> np.ndarray:
    """Orthoprojector I - MM⁺ onto coker M = ker Mᵀ."""
    M = as_real_matrix(M)
    P = np.eye(M.shape[0]) - M @ pseudoinverse(M, tol, scale)
    return 0.5 * (P + P.T)


def independent_columns(P, r: int, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> np.ndarray:
    """Pick ``r`` linearly independent columns of the projector ``P``.

    Columns are chosen by column-pivoted QR (largest remaining norm first,
    lowest index on ties) and returned in their original order.
    """
    P = as_real_matrix(P, "projector")
    found = numerical_rank(P, tol)
    if found != r:
        raise InconsistentRankError(r, found)
    if r == 0:
        return P[:, :0].copy()
    _, pivots = scipy.linalg.qr(P, mode="r", pivoting=True)
    chosen = np.sort(pivots[:r])
    logger.debug("independent columns %s of %d", chosen.tolist(), P.shape[1])
    return P[:, chosen].copy()


def independent_rows(P, d: int, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> np.ndarray:
    """Row counterpart of :func:`independent_columns`."""
    P = as_real_matrix(P, "projector")
    return independent_columns(P.T, d, tol).T.copy()


def least_squares_min_norm(M, y, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> np.ndarray:
    """Minimum-norm least-squares solution M⁺y."""
    M = as_real_matrix(M)
    y = as_real_vector(y, "right-hand side")
    if y.shape[0] != M.shape[0]:
        raise InvalidInputError(f"right-hand side has length {y.shape[0]}, expected {M.shape[0]}")
    return pseudoinverse(M, tol) @ y


def sup_norm(v) -> float:
    """‖v‖∞, zero for empty input."""
    arr = np.asarray(v, dtype=float)
    return float(np.max(np.abs(arr), initial=0.0))
