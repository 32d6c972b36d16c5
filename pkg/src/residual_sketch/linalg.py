"""Dense kernel: singular values and rank-k residual tails of small matrices.

Matrices are plain 2-D ``float64`` numpy arrays. Only sketches are ever
decomposed here, so a full dense SVD is always affordable.
"""
import numpy as np
import scipy.linalg as la

from .errors import InvalidInput, NumericalFailure


def as_dense(M):
    """Return ``M`` as a finite 2-D float64 array, raising InvalidInput otherwise."""
    if hasattr(M, "toarray"):
        M = M.toarray()
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidInput(f"expected a 2-D matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix contains NaN or Inf")
    return M


def singular_values(M):
    """Full singular spectrum of ``M`` in nonincreasing order.

    Uses LAPACK ``gesdd`` and falls back to the slower but more robust
    ``gesvd`` driver if the divide-and-conquer routine does not converge.
    """
    M = as_dense(M)
    if min(M.shape) < 1:
        raise InvalidInput(f"empty matrix of shape {M.shape}")
    try:
        s = la.svd(M, compute_uv=False, lapack_driver="gesdd", check_finite=False)
    except la.LinAlgError:
        try:
            s = la.svd(M, compute_uv=False, lapack_driver="gesvd", check_finite=False)
        except la.LinAlgError as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    # LAPACK already sorts; clip guards against -0.0
    return np.maximum(s, 0.0)


def rank_k_residual(M, k):
    """``||M - M_k||_F``: the l2 norm of the singular values past index k.

    Returns 0 when ``k >= min(M.shape)`` so callers can sweep k freely.
    """
    if k < 0:
        raise InvalidInput(f"k must be nonnegative, got {k}")
    s = singular_values(M)
    if k >= s.size:
        return 0.0
    tail = s[k:]
    return float(np.sqrt(np.dot(tail, tail)))


def frobenius_norm(M):
    M = as_dense(M)
    return float(np.sqrt(np.sum(M * M)))
