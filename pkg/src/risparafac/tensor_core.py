"""Dense complex kernels: Khatri-Rao product, PARAFAC unfoldings, pseudo-inverse.

Index conventions (0-based) for the three unfoldings of the K x M x P tensor
``Z[k, m, p] = sum_n H2[k, n] * H1[n, m] * Phi[p, n]``:

=====  ===========  =============  ===========
mode   shape        row index      column
=====  ===========  =============  ===========
1      (P*M, K)     m * P + p      k
2      (K*P, M)     p * K + k      m
3      (M*K, P)     k * M + m      p
=====  ===========  =============  ===========

These are exactly the row orders produced by :func:`khatri_rao` with the
first factor varying slowest.
"""

import numpy as np

from .errors import DimensionError


def _as_matrix(a, name):
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def khatri_rao(a, b):
    """Column-wise Kronecker product.

    Row ``r1 * b.shape[0] + r2`` of column ``n`` holds ``a[r1, n] * b[r2, n]``.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"khatri_rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def factor_dims(h1, h2, phi):
    """Validate the factor triple and return ``(M, K, N, P)``."""
    h1 = _as_matrix(h1, "H1")
    h2 = _as_matrix(h2, "H2")
    phi = _as_matrix(phi, "Phi")
    n, m = h1.shape
    k = h2.shape[0]
    p = phi.shape[0]
    if h2.shape[1] != n or phi.shape[1] != n:
        raise DimensionError(
            f"inconsistent RIS size: H1 {h1.shape}, H2 {h2.shape}, Phi {phi.shape}"
        )
    return m, k, n, p


def unfold_mode1(h1, h2, phi):
    """Mode-1 unfolding ``(H1^T kr Phi) H2^T``, shape (P*M, K)."""
    factor_dims(h1, h2, phi)
    return khatri_rao(np.asarray(h1).T, phi) @ np.asarray(h2).T


def unfold_mode2(h1, h2, phi):
    """Mode-2 unfolding ``(Phi kr H2) H1``, shape (K*P, M)."""
    factor_dims(h1, h2, phi)
    return khatri_rao(phi, h2) @ np.asarray(h1)


def unfold_mode3(h1, h2, phi):
    """Mode-3 unfolding ``(H2 kr H1^T) Phi^T``, shape (M*K, P)."""
    factor_dims(h1, h2, phi)
    return khatri_rao(h2, np.asarray(h1).T) @ np.asarray(phi).T


def default_pinv_tol(shape):
    return np.finfo(np.float64).eps * max(shape)


def pseudo_inverse(a, tol=None, return_rank=False):
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values below ``tol * s_max`` are treated as zero. ``tol``
    defaults to ``eps * max(a.shape)``. With ``return_rank=True`` the
    effective rank is returned alongside the inverse.
    """
    a = _as_matrix(a, "a")
    if tol is None:
        tol = default_pinv_tol(a.shape)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    cutoff = tol * (s[0] if s.size else 0.0)
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    pinv = (vh.conj().T * s_inv) @ u.conj().T
    if return_rank:
        return pinv, rank
    return pinv
