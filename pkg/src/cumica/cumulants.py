"""Sample standardization and third/fourth cumulant statistics.

Everything here works on data matrices with observations in rows.  The
standardization step removes the sample mean and transforms the sample
covariance to the identity; all cumulant statistics are then computed on
the standardized rows.  Sample moments divide by ``n`` throughout (no
small-sample bias corrections), so the statistics are exactly the plug-in
moment estimators that the asymptotic theory describes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (IndexOutOfRange, NotPositiveDefinite, NotUnit,
                     SingularCustomWhitener)
from .linalg import inv_sqrt_sym


@dataclass
class StandardizedSample:
    """A centered and whitened data matrix.

    Attributes
    ----------
    xst : (n, p) ndarray
        Standardized observations: ``xst = (x - mean) @ whitener.T``.
    mean : (p,) ndarray
        Sample mean of the raw data.
    whitener : (p, p) ndarray
        The transformation applied after centering.
    """

    xst: np.ndarray
    mean: np.ndarray
    whitener: np.ndarray


def sample_cov(X):
    """Sample covariance with the 1/n convention, after mean removal."""
    X = np.asarray(X, dtype=float)
    Xc = X - X.mean(axis=0)
    return (Xc.T @ Xc) / X.shape[0]


def standardize(X, whitener="symmetric"):
    """Center ``X`` and transform its sample covariance to the identity.

    Parameters
    ----------
    X : (n, p) array_like
        Data matrix, observations in rows.
    whitener : {"symmetric"} or (p, p) array_like
        ``"symmetric"`` uses the unique symmetric inverse square root of
        the sample covariance.  A matrix ``W0`` is taken as a candidate
        whitener supplied by the caller; its rows are rescaled so each
        projection has unit sample variance and the result is polished
        into an exact whitener by a symmetric correction.  When ``W0``
        already whitens the sample, it is returned unchanged up to
        floating-point noise.

    Returns
    -------
    StandardizedSample
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d data matrix, got shape {X.shape}")
    n, p = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    S = (Xc.T @ Xc) / n

    if isinstance(whitener, str):
        if whitener != "symmetric":
            raise ValueError(f"unknown whitener: {whitener!r}")
        G = inv_sqrt_sym(S)
    else:
        W0 = np.asarray(whitener, dtype=float)
        if W0.shape != (p, p):
            raise ValueError(f"whitener must be {p}x{p}, got {W0.shape}")
        d = np.einsum("ij,jk,ik->i", W0, S, W0)
        if (d <= 0).any() or not np.all(np.isfinite(d)):
            raise SingularCustomWhitener(
                "custom whitener maps the sample covariance to a matrix "
                "with nonpositive diagonal")
        W1 = W0 / np.sqrt(d)[:, None]
        M = W1 @ S @ W1.T
        try:
            G = inv_sqrt_sym((M + M.T) / 2.0) @ W1
        except NotPositiveDefinite as exc:
            raise SingularCustomWhitener(
                "custom whitener is rank deficient on this sample") from exc
    return StandardizedSample(xst=Xc @ G.T, mean=mean, whitener=G)


def _as_xst(xst):
    X = np.asarray(xst, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d data matrix, got shape {X.shape}")
    return X


def _check_index(i, p, name="i"):
    if not (0 <= i < p):
        raise IndexOutOfRange(f"index {name}={i} out of range for p={p}")


def projection_cumulants(xst, u, tol=1e-10):
    """Skewness and excess kurtosis of the projection ``xst @ u``.

    ``u`` must be unit-norm (the projection of standardized data onto a
    unit vector has unit variance, which the cumulant formulas assume).

    Returns
    -------
    (float, float)
        ``(mean(y**3), mean(y**4) - 3)`` for ``y = xst @ u``.
    """
    X = _as_xst(xst)
    u = np.asarray(u, dtype=float).ravel()
    if u.shape[0] != X.shape[1]:
        raise ValueError(f"u has length {u.shape[0]}, expected {X.shape[1]}")
    nrm = np.linalg.norm(u)
    if abs(nrm - 1.0) > tol:
        raise NotUnit(f"projection direction has norm {nrm!r}, expected 1")
    y = X @ u
    y2 = y * y
    return float(np.mean(y2 * y)), float(np.mean(y2 * y2) - 3.0)


def cum3_matrix(xst, i):
    """Third-cumulant matrix ``E[x_i * x x^T]``, symmetrized.

    For data with zero mean the third moment array is already the third
    cumulant; the slice along coordinate ``i`` is returned.
    """
    X = _as_xst(xst)
    n, p = X.shape
    _check_index(i, p)
    M = (X * X[:, [i]]).T @ X / n
    return (M + M.T) / 2.0


def cum4_matrix(xst, i, j):
    """Fourth-cumulant matrix ``E[x_i x_j x x^T] - corrections``, symmetrized.

    The corrections subtract the Gaussian part using the *sample*
    covariance of ``xst`` (not the identity), which keeps finite-sample
    identities exact when the input is standardized:

        C[i,j] = E[x_i x_j x x^T] - S[i,j] S - S[:,i] S[:,j]^T
                 - S[:,j] S[:,i]^T
    """
    X = _as_xst(xst)
    n, p = X.shape
    _check_index(i, p, "i")
    _check_index(j, p, "j")
    S = (X.T @ X) / n
    M = (X * (X[:, [i]] * X[:, [j]])).T @ X / n
    M = M - S[i, j] * S - np.outer(S[:, i], S[:, j]) - np.outer(S[:, j], S[:, i])
    return (M + M.T) / 2.0


def compound_matrices(xst):
    """The compound cumulant matrices ``(C3, C4)``.

    ``C3`` accumulates ``cum3_matrix(xst, i)`` and ``C4`` accumulates
    ``cum4_matrix(xst, i, i)`` over ``i = 0, ..., p-1`` in index order.
    """
    X = _as_xst(xst)
    p = X.shape[1]
    C3 = np.zeros((p, p))
    C4 = np.zeros((p, p))
    for i in range(p):
        C3 += cum3_matrix(X, i)
        C4 += cum4_matrix(X, i, i)
    return C3, C4


def cum3_stack(xst):
    """All ``p`` third-cumulant matrices as a ``(p, p, p)`` stack.

    ``stack[i]`` equals ``cum3_matrix(xst, i)``.
    """
    X = _as_xst(xst)
    n, p = X.shape
    T = np.einsum("ri,ra,rb->iab", X, X, X, optimize=True) / n
    return (T + np.swapaxes(T, 1, 2)) / 2.0


def cum4_stack(xst):
    """All distinct fourth-cumulant matrices as a ``(p*(p+1)//2, p, p)`` stack.

    Index pairs ``(i, j)`` with ``i <= j`` are enumerated in row-major
    order; ``stack[m]`` equals ``cum4_matrix(xst, i, j)`` for the m-th
    pair.  The pair list is returned alongside the stack.
    """
    X = _as_xst(xst)
    n, p = X.shape
    S = (X.T @ X) / n
    # Gram trick: the full fourth moment tensor is Z^T Z / n for the
    # row-wise Khatri-Rao product Z[r, (i, j)] = X[r, i] * X[r, j].
    Z = (X[:, :, None] * X[:, None, :]).reshape(n, p * p)
    T = (Z.T @ Z / n).reshape(p, p, p, p)
    pairs = [(i, j) for i in range(p) for j in range(i, p)]
    out = np.empty((len(pairs), p, p))
    for m, (i, j) in enumerate(pairs):
        M = (T[i, j]
             - S[i, j] * S
             - np.outer(S[:, i], S[:, j])
             - np.outer(S[:, j], S[:, i]))
        out[m] = (M + M.T) / 2.0
    return out, pairs


def fobi_matrix(xst):
    """The kurtosis-weighted scatter ``mean(||x||^2 x x^T)``."""
    X = _as_xst(xst)
    n = X.shape[0]
    r2 = (X * X).sum(axis=1)
    return (X * r2[:, None]).T @ X / n
