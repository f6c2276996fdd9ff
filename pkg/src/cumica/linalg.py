"""Symmetric-matrix and orthogonal-group primitives built on Jacobi rotations.

One rotation engine serves every decomposition in the package: plane
rotations with the closed-form optimal Givens angle, applied in cyclic order
over index pairs.  A single symmetric matrix makes it the classical Jacobi
eigensolver; a weighted stack makes it the approximate joint diagonalizer
used by the cumulant-matrix estimators.  The solver is self-contained on
purpose — dimensions here are small (p <= 50) and the same code path then
backs the eigendecompositions, symmetric inverse square roots and polar
factors, so all of them share one set of conventions:

* eigenvalues sorted in descending order,
* each eigenvector's largest-magnitude entry made positive,
* rotation-angle convergence test (largest |theta| in a sweep below tol).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite, RankDeficient

# Relative eigenvalue/singular-value floor below which a matrix is treated
# as not positive definite / rank deficient.
EIG_FLOOR = 1e-12


def require_symmetric(S, tol=1e-12, name="matrix"):
    """Validate that ``S`` is square and symmetric to relative tolerance."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    scale = max(1.0, np.abs(S).max()) if S.size else 1.0
    if np.abs(S - S.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric (relative tol {tol})")
    return S


def is_orthogonal(U, tol=1e-10):
    U = np.asarray(U, dtype=float)
    return (U.ndim == 2 and U.shape[0] == U.shape[1]
            and np.abs(U @ U.T - np.eye(U.shape[0])).max() <= tol)


def _optimal_angle(h1, h2, weights):
    """Givens angle maximizing the weighted squared-diagonal gain of a pair.

    ``h1[s] = B_s[k,k] - B_s[l,l]`` and ``h2[s] = B_s[k,l] + B_s[l,k]``.
    The rotated difference is cos(2t)*h1 + sin(2t)*h2, so the optimal
    (cos 2t, sin 2t) is the leading eigenvector of the accumulated 2x2
    Gram matrix of (h1, h2); the branch with cos 2t >= 0 keeps |t| <= pi/4.
    """
    g11 = weights @ (h1 * h1)
    g12 = weights @ (h1 * h2)
    g22 = weights @ (h2 * h2)
    ton = g11 - g22
    toff = 2.0 * g12
    r = math.hypot(ton, toff)
    if r <= 0.0:
        return 0.0
    x = ton + r
    if math.hypot(x, toff) <= 1e-30 * r:
        # leading eigenvector is (0, 1): equal diagonals, pure off-diagonal
        return math.pi / 4.0
    return 0.5 * math.atan2(toff, x)


def _rotate_stack(stack, k, l, c, s):
    """Apply B <- R B R^T on every matrix in the stack, in place.

    R is the identity except R[k,k] = R[l,l] = c, R[k,l] = s, R[l,k] = -s.
    """
    new_k = c * stack[:, k, :] + s * stack[:, l, :]
    new_l = c * stack[:, l, :] - s * stack[:, k, :]
    stack[:, k, :] = new_k
    stack[:, l, :] = new_l
    new_k = c * stack[:, :, k] + s * stack[:, :, l]
    new_l = c * stack[:, :, l] - s * stack[:, :, k]
    stack[:, :, k] = new_k
    stack[:, :, l] = new_l


@dataclass
class JointDiagResult:
    """Outcome of a joint (approximate) diagonalization.

    ``U`` holds the orthogonal diagonalizer whose rows U @ A_s @ U.T make the
    rotated stack as diagonal as possible.  Convergence problems are reported
    through ``converged`` rather than raised: the best rotation found is
    always returned.  History arrays carry one entry per completed sweep
    (objective and mass also record the initial state at index 0) so callers
    can assert the objective never decreases and that the total weighted
    Frobenius mass is conserved by the rotations.
    """

    U: np.ndarray
    sweeps: int
    converged: bool
    objective: float
    objective_history: np.ndarray
    mass_history: np.ndarray
    max_angle_history: np.ndarray
    diagonals: np.ndarray
    rotated: np.ndarray


def joint_diagonalize(matrices, weights=None, tol=1e-10, max_sweeps=100):
    """Jointly diagonalize symmetric matrices by cyclic Jacobi sweeps.

    Maximizes ``sum_s w_s * ||diag(U A_s U^T)||^2`` over orthogonal U using
    plane rotations with the closed-form optimal angle per index pair.  Each
    rotation can only increase the objective, and the weighted total squared
    Frobenius mass is invariant, so the off-diagonal mass decreases
    monotonically.

    Parameters
    ----------
    matrices : sequence of (p, p) arrays or (m, p, p) array
        Symmetric matrices to diagonalize.
    weights : sequence of m nonnegative floats, optional
        Relative weight of each matrix in the objective (default: all one).
    tol : float, optional
        Rotation-angle tolerance: convergence is declared when the largest
        |angle| over a full sweep falls below it.
    max_sweeps : int, optional
        Sweep budget; exhaustion is flagged via ``converged=False``.

    Returns
    -------
    JointDiagResult
    """
    arr = np.asarray(matrices, dtype=float)
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise ValueError(f"expected a nonempty stack of square matrices, "
                         f"got shape {arr.shape}")
    stack = np.stack([require_symmetric(A, name=f"matrices[{i}]")
                      for i, A in enumerate(arr)])
    m, p, _ = stack.shape
    if weights is None:
        w = np.ones(m)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (m,):
            raise ValueError(f"expected {m} weights, got shape {w.shape}")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")

    def objective():
        d = stack.diagonal(axis1=1, axis2=2)
        return float(w @ (d * d).sum(axis=1))

    def mass():
        return float(w @ (stack * stack).sum(axis=(1, 2)))

    U = np.eye(p)
    obj_hist = [objective()]
    mass_hist = [mass()]
    angle_hist = []
    converged = p < 2
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        biggest = 0.0
        for k in range(p - 1):
            for l in range(k + 1, p):
                h1 = stack[:, k, k] - stack[:, l, l]
                h2 = stack[:, k, l] + stack[:, l, k]
                theta = _optimal_angle(h1, h2, w)
                biggest = max(biggest, abs(theta))
                if abs(theta) < tol:
                    continue
                c, s = math.cos(theta), math.sin(theta)
                _rotate_stack(stack, k, l, c, s)
                new_uk = c * U[k, :] + s * U[l, :]
                new_ul = c * U[l, :] - s * U[k, :]
                U[k, :] = new_uk
                U[l, :] = new_ul
        obj_hist.append(objective())
        mass_hist.append(mass())
        angle_hist.append(biggest)
        if biggest < tol:
            converged = True

    return JointDiagResult(
        U=U,
        sweeps=sweeps,
        converged=converged,
        objective=obj_hist[-1],
        objective_history=np.array(obj_hist),
        mass_history=np.array(mass_hist),
        max_angle_history=np.array(angle_hist),
        diagonals=stack.diagonal(axis1=1, axis2=2).copy(),
        rotated=stack,
    )


def sym_eig(S, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with eigenvalues sorted in descending
    order, eigenvectors in the columns of ``vectors``, and each column's
    largest-magnitude entry made positive.
    """
    S = require_symmetric(S)
    res = joint_diagonalize([S], tol=tol, max_sweeps=max_sweeps)
    values = res.diagonals[0]
    vectors = res.U.T  # rows of U diagonalize, so columns of U.T are eigenvectors
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    flip = vectors[np.abs(vectors).argmax(axis=0), np.arange(len(values))] < 0
    vectors[:, flip] *= -1.0
    return values, vectors


def inv_sqrt_sym(S):
    """Symmetric inverse square root G with G S G = I.

    Raises
    ------
    NotPositiveDefinite
        If any eigenvalue is at or below ``1e-12`` times the largest.
    """
    values, vectors = sym_eig(S)
    if values[0] <= 0.0 or values[-1] <= EIG_FLOOR * values[0]:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (eigenvalue range "
            f"[{values[-1]:.3e}, {values[0]:.3e}])")
    G = (vectors / np.sqrt(values)) @ vectors.T
    return 0.5 * (G + G.T)


def polar_orthogonal(T):
    """Orthogonal polar factor U = T (T^T T)^{-1/2}.

    Among all orthogonal matrices, U maximizes trace(U T^T).  Requires the
    smallest singular value to exceed ``1e-12`` times the largest.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {T.shape}")
    values, vectors = sym_eig(T.T @ T)
    if values[0] <= 0.0 or values[-1] <= (EIG_FLOOR ** 2) * values[0]:
        raise RankDeficient(
            f"matrix is numerically rank deficient (squared singular value "
            f"range [{values[-1]:.3e}, {values[0]:.3e}])")
    U = T @ ((vectors / np.sqrt(values)) @ vectors.T)
    # One polish pass keeps U orthogonal to machine precision even when T is
    # poorly conditioned (the T^T T route squares the condition number).
    defect = U @ U.T - np.eye(U.shape[0])
    if np.abs(defect).max() > 1e-12:
        values, vectors = sym_eig(U.T @ U)
        U = U @ ((vectors / np.sqrt(values)) @ vectors.T)
    return U


def random_orthogonal(p, rng):
    """Haar-ish random orthogonal matrix: QR of a standard Gaussian draw."""
    Z = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))
