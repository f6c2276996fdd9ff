"""The four unmixing-matrix estimators.

All estimators share the same preprocessing (center, whiten to identity
sample covariance) and the same weight convention: ``alpha`` in [0, 1]
is the proportion of weight on squared third cumulants, ``1 - alpha`` on
squared fourth cumulants.  The returned matrix W unmixes the raw data:
rows of ``(X - mean(X)) @ W.T`` estimate the independent sources, and
``W Cov(X) W^T = I``.

Methods
-------
deflation_pp
    Rows extracted one at a time by a projected fixed-point iteration.
symmetric_pp
    All rows iterated simultaneously with a polar-decomposition step.
compound_cumulant
    Eigendecomposition / joint diagonalization of the two compound
    cumulant matrices after standardizing by a root-n-consistent pilot
    estimator.
all_cumulant
    Joint diagonalization of every third- and fourth-cumulant matrix
    (the JADE family; ``alpha = 0`` is classical JADE).

Fixed-point iterations accept an update only if it does not decrease
the sample objective; when the raw update would, a backtracked ascent
step along the Riemannian gradient is used instead, so the logged
objective history is non-decreasing by construction.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cumulants import compound_matrices, cum3_stack, cum4_stack, fobi_matrix, standardize
from .errors import (DegenerateObjective, NearDegenerateSpectrum,
                     RankDeficient)
from .linalg import joint_diagonalize, polar_orthogonal, random_orthogonal, sym_eig

#: Objective floor (times p) below which the estimate cannot be trusted
#: to separate anything; triggers the DegenerateObjective warning.
_DEGENERATE_FLOOR = 1e-3


@dataclass
class SolverOptions:
    """Iteration controls shared by all estimators."""

    tol: float = 1e-9
    max_iter: int = 500
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts!r}")


@dataclass
class UnmixingEstimate:
    """Result of one estimator run.

    Attributes
    ----------
    W : (p, p) ndarray
        Unmixing matrix in canonical form (see Notes).
    method : str
    alpha : float
    iterations : list of int
        Per-stage iteration counts: one entry per row for the deflation
        estimator, the winning restart's count for the symmetric one,
        and the sweep count for the diagonalization methods.
    converged : bool
    objective : float
        Final sample objective.
    restarts_used : int
        Number of restarts that ran to completion.
    objective_history : object
        Accepted-iterate objective values: an array for single-loop
        methods, a list of per-row arrays for the deflation estimator.

    Notes
    -----
    Canonical form: rows are ordered by descending sample criterion
    ``alpha * skew^2 + (1 - alpha) * kurt^2`` and each row is signed so
    its skewness estimate is nonnegative when ``alpha > 0`` (falling
    back to making the largest-magnitude entry positive).
    """

    W: np.ndarray
    method: str
    alpha: float
    iterations: list
    converged: bool
    objective: float
    restarts_used: int
    objective_history: object = None


def _check_alpha(alpha):
    if not (0.0 <= alpha <= 1.0) or not math.isfinite(alpha):
        raise ValueError(f"alpha must be in [0, 1], got {alpha!r}")
    return float(alpha)


def _source_cumulants(xst, U):
    """Per-row skewness and excess kurtosis of candidate sources xst @ U.T."""
    Y = xst @ U.T
    Y2 = Y * Y
    h3 = (Y2 * Y).mean(axis=0)
    h4 = (Y2 * Y2).mean(axis=0) - 3.0
    return h3, h4


def _objective(alpha, h3, h4):
    return float(alpha * (h3 @ h3) + (1.0 - alpha) * (h4 @ h4))


def _warn_if_degenerate(objective, p):
    if objective < _DEGENERATE_FLOOR * p:
        warnings.warn(
            f"best objective {objective:.3e} is below {_DEGENERATE_FLOOR}*p; "
            f"the chosen cumulant weighting carries almost no signal for "
            f"these sources", DegenerateObjective, stacklevel=3)


def _canonical_form(W, xst, whitener, alpha):
    """Reorder and re-sign the rotation rows, then map through the whitener."""
    h3, h4 = _source_cumulants(xst, W)
    keys = alpha * h3 * h3 + (1.0 - alpha) * h4 * h4
    order = np.argsort(-keys, kind="stable")
    W = W[order].copy()
    h3 = h3[order]
    for k in range(W.shape[0]):
        if alpha > 0.0 and h3[k] != 0.0:
            if h3[k] < 0.0:
                W[k] = -W[k]
        else:
            j = int(np.argmax(np.abs(W[k])))
            if W[k, j] < 0.0:
                W[k] = -W[k]
    return W @ whitener


def _sign_blind_row_delta(U_new, U_old):
    """max over rows of min(|row diff|, |row sum|) in the sup norm."""
    diff = np.abs(U_new - U_old).max(axis=1)
    summ = np.abs(U_new + U_old).max(axis=1)
    return float(np.minimum(diff, summ).max())


def _stage_starts(p, restarts, rng):
    """Identity plus restarts-1 random orthogonal matrices."""
    return [np.eye(p)] + [random_orthogonal(p, rng) for _ in range(restarts - 1)]


def _orthocomplement_vector(prev):
    """Any unit vector orthogonal to the rows of ``prev``."""
    k, p = prev.shape
    # Complete prev's row space to an orthonormal basis and take the
    # first new direction.
    q, _ = np.linalg.qr(np.concatenate([prev, np.eye(p)]).T)
    for j in range(k, p):
        v = q[:, j]
        if np.abs(prev @ v).max() < 1e-8:
            return v / np.linalg.norm(v)
    raise RankDeficient("cannot extend the extracted rows to a basis")


def deflation_pp(X, alpha, opts=None):
    """Deflation-based projection pursuit estimator.

    Rows are found one at a time: row k maximizes the sample criterion
    ``alpha * skew(u)^2 + (1 - alpha) * kurt(u)^2`` over unit vectors u
    orthogonal to the rows already found, by a projected fixed-point
    iteration on the cumulant estimating equation.  Each stage tries an
    identity-derived start plus ``opts.restarts - 1`` random orthogonal
    starts and keeps the largest final criterion (ties favor the
    earliest start).
    """
    alpha = _check_alpha(alpha)
    opts = opts or SolverOptions()
    st = standardize(X)
    xst = st.xst
    n, p = xst.shape
    rng = np.random.default_rng(opts.seed)
    starts = _stage_starts(p, opts.restarts, rng)

    rows = []
    iterations = []
    histories = []
    all_converged = True
    for k in range(p):
        prev = np.array(rows) if rows else np.zeros((0, p))

        def project(v):
            return v - prev.T @ (prev @ v) if len(rows) else v

        best = None  # (objective, restart index, u, iters, converged, history)
        for r, R in enumerate(starts):
            u = project(R[k])
            nrm = np.linalg.norm(u)
            u = _orthocomplement_vector(prev) if nrm < 1e-8 else u / nrm
            hist = []
            converged = False
            iters = 0
            y = xst @ u
            obj = _stage_obj(alpha, y)
            hist.append(obj)
            for iters in range(1, opts.max_iter + 1):
                t_vec = _stage_fixed_point(alpha, xst, y)
                tp = project(t_vec)
                tn = np.linalg.norm(tp)
                if tn < 1e-300:
                    converged = True  # criterion gradient vanishes here
                    break
                u_new = tp / tn
                y_new = xst @ u_new
                obj_new = _stage_obj(alpha, y_new)
                if obj_new < obj:
                    u_new, y_new, obj_new = _stage_backtrack(
                        alpha, xst, project, u, y, obj, tp)
                delta = min(np.abs(u_new - u).max(), np.abs(u_new + u).max())
                u, y, obj = u_new, y_new, obj_new
                hist.append(obj)
                if delta < opts.tol:
                    converged = True
                    break
            cand = (obj, -r, u, iters, converged, np.array(hist))
            if best is None or cand[0] > best[0]:
                best = cand
        obj, neg_r, u, iters, conv, hist = best
        rows.append(u)
        iterations.append(iters)
        histories.append(hist)
        all_converged = all_converged and conv

    U = np.array(rows)
    h3, h4 = _source_cumulants(xst, U)
    objective = _objective(alpha, h3, h4)
    _warn_if_degenerate(objective, p)
    W = _canonical_form(U, xst, st.whitener, alpha)
    return UnmixingEstimate(
        W=W, method="deflation", alpha=alpha, iterations=iterations,
        converged=all_converged, objective=objective,
        restarts_used=opts.restarts, objective_history=histories)


def _stage_obj(alpha, y):
    y2 = y * y
    h3 = float((y2 * y).mean())
    h4 = float((y2 * y2).mean() - 3.0)
    return alpha * h3 * h3 + (1.0 - alpha) * h4 * h4


def _stage_fixed_point(alpha, xst, y):
    """The estimating-equation vector T(u) for the current projection y."""
    n = xst.shape[0]
    y2 = y * y
    y3 = y2 * y
    h3 = float(y3.mean())
    h4 = float((y2 * y2).mean() - 3.0)
    t3 = xst.T @ y2 / n
    t4 = xst.T @ y3 / n
    return 3.0 * alpha * h3 * t3 + 4.0 * (1.0 - alpha) * h4 * t4


def _stage_backtrack(alpha, xst, project, u, y, obj, t_vec):
    """Ascent fallback: walk along the in-sphere gradient until the
    criterion stops decreasing.  Returns the accepted (u, y, obj)."""
    d = t_vec - (u @ t_vec) * u  # tangent component; ascent direction
    step = 1.0
    for _ in range(60):
        cand = u + step * d
        cand = project(cand)
        nrm = np.linalg.norm(cand)
        if nrm > 1e-300:
            cand = cand / nrm
            y_c = xst @ cand
            obj_c = _stage_obj(alpha, y_c)
            if obj_c >= obj:
                return cand, y_c, obj_c
        step *= 0.5
    return u, y, obj  # numerically stationary


def symmetric_pp(X, alpha, opts=None):
    """Symmetric projection pursuit estimator.

    All rows are iterated together: the stacked estimating equations T
    are mapped back to the orthogonal group by the polar decomposition
    ``U = T (T^T T)^{-1/2}``.  The identity start runs first, followed by
    ``opts.restarts - 1`` random orthogonal starts; the largest final
    objective wins, ties resolved toward the earlier start.
    """
    alpha = _check_alpha(alpha)
    opts = opts or SolverOptions()
    st = standardize(X)
    xst = st.xst
    n, p = xst.shape
    rng = np.random.default_rng(opts.seed)
    starts = _stage_starts(p, opts.restarts, rng)

    best = None  # (objective, -restart index, U, iters, converged, history)
    failures = 0
    for r, U0 in enumerate(starts):
        try:
            cand = _symmetric_single(alpha, xst, U0, opts)
        except RankDeficient:
            failures += 1
            continue
        obj, U, iters, converged, hist = cand
        key = (obj, -r)
        if best is None or key > (best[0], best[1]):
            best = (obj, -r, U, iters, converged, hist)
    if best is None:
        raise RankDeficient(
            "estimating equations lost rank in every restart")
    obj, neg_r, U, iters, converged, hist = best
    _warn_if_degenerate(obj, p)
    W = _canonical_form(U, xst, st.whitener, alpha)
    return UnmixingEstimate(
        W=W, method="symmetric", alpha=alpha, iterations=[iters],
        converged=converged, objective=obj,
        restarts_used=opts.restarts - failures, objective_history=hist)


def _symmetric_T(alpha, xst, U):
    n = xst.shape[0]
    Y = xst @ U.T
    Y2 = Y * Y
    Y3 = Y2 * Y
    h3 = Y3.mean(axis=0)
    h4 = (Y2 * Y2).mean(axis=0) - 3.0
    T3 = xst.T @ Y2 / n
    T4 = xst.T @ Y3 / n
    T = (3.0 * alpha) * (T3 * h3) + (4.0 * (1.0 - alpha)) * (T4 * h4)
    return T.T, h3, h4


def _symmetric_single(alpha, xst, U0, opts):
    p = U0.shape[0]
    U = U0.copy()
    h3, h4 = _source_cumulants(xst, U)
    obj = _objective(alpha, h3, h4)
    hist = [obj]
    converged = False
    iters = 0
    for iters in range(1, opts.max_iter + 1):
        T, h3, h4 = _symmetric_T(alpha, xst, U)
        if np.abs(T).max() < 1e-300:
            converged = True  # stationary: every row criterion is flat
            break
        U_new = polar_orthogonal(T)
        h3n, h4n = _source_cumulants(xst, U_new)
        obj_new = _objective(alpha, h3n, h4n)
        if obj_new < obj:
            U_new, obj_new = _symmetric_backtrack(alpha, xst, U, obj, T)
        delta = _sign_blind_row_delta(U_new, U)
        U, obj = U_new, obj_new
        hist.append(obj)
        if delta < opts.tol:
            converged = True
            break
    return obj, U, iters, converged, np.array(hist)


def _symmetric_backtrack(alpha, xst, U, obj, T):
    """Ascent fallback on the orthogonal group via Cayley steps.

    T is half the Euclidean gradient of the objective at U; the skew
    part of (2T) U^T generates the steepest-ascent rotation flow.
    """
    p = U.shape[0]
    G = 2.0 * T
    A = G @ U.T
    A = A - A.T
    eye = np.eye(p)
    step = 1.0
    for _ in range(60):
        M = (0.5 * step) * A
        try:
            U_c = np.linalg.solve(eye - M, (eye + M) @ U)
        except np.linalg.LinAlgError:
            step *= 0.5
            continue
        h3, h4 = _source_cumulants(xst, U_c)
        obj_c = _objective(alpha, h3, h4)
        if obj_c >= obj:
            return U_c, obj_c
        step *= 0.5
    return U, obj  # numerically stationary


def _fobi_unmixing(X):
    """Classical kurtosis-scatter estimator used as a pilot standardizer."""
    st = standardize(X)
    B = fobi_matrix(st.xst)
    _, vecs = sym_eig(B)
    return vecs.T @ st.whitener


def _spectrum_warning(alpha, xst, U, n):
    """Warn when the eigenvalue gaps identifying the rotation are within
    sampling noise (three standard errors) of zero for some pair."""
    Y = xst @ U.T
    Y2 = Y * Y
    Y3 = Y2 * Y
    Y4 = Y2 * Y2
    g = Y3.mean(axis=0)
    k4 = Y4.mean(axis=0) - 3.0
    var3 = (Y3 * Y3).mean(axis=0) - g * g
    m4 = Y4.mean(axis=0)
    var4 = (Y4 * Y4).mean(axis=0) - m4 * m4
    se3 = np.sqrt(np.maximum(var3, 0.0) / n)
    se4 = np.sqrt(np.maximum(var4, 0.0) / n)
    p = U.shape[0]
    bad = []
    for a in range(p - 1):
        for b in range(a + 1, p):
            gap2 = (alpha * (g[a] - g[b]) ** 2
                    + (1.0 - alpha) * (k4[a] - k4[b]) ** 2)
            se2 = (alpha * (se3[a] ** 2 + se3[b] ** 2)
                   + (1.0 - alpha) * (se4[a] ** 2 + se4[b] ** 2))
            if gap2 < 9.0 * se2:
                bad.append((a, b))
    if bad:
        warnings.warn(
            f"cumulant spectrum gaps for component pair(s) {bad} are within "
            f"three standard errors of zero; the corresponding rows are not "
            f"reliably identified", NearDegenerateSpectrum, stacklevel=3)


def compound_cumulant(X, alpha, standardizer=None, opts=None):
    """Compound cumulant-matrix estimator.

    The data are first unmixed by a pilot root-n-consistent estimator
    (the ``standardizer``), then the two compound matrices C3 and C4 are
    formed and the remaining rotation is found by eigendecomposition
    (``alpha`` 0 or 1) or weighted joint diagonalization.

    Parameters
    ----------
    standardizer : None, "fobi", "symmetric", or (p, p) array_like
        ``None`` picks "fobi" when ``alpha == 0`` (which reproduces the
        classical kurtosis-scatter estimator) and "symmetric" (the
        symmetric PP estimator with the same alpha) otherwise.
    """
    alpha = _check_alpha(alpha)
    opts = opts or SolverOptions()
    if standardizer is None:
        standardizer = "fobi" if alpha == 0.0 else "symmetric"
    if isinstance(standardizer, str):
        if standardizer == "fobi":
            W0 = _fobi_unmixing(X)
        elif standardizer == "symmetric":
            W0 = symmetric_pp(X, alpha, opts).W
        else:
            raise ValueError(f"unknown standardizer: {standardizer!r}")
    else:
        W0 = np.asarray(standardizer, dtype=float)
    st = standardize(X, whitener=W0)
    xst = st.xst
    n, p = xst.shape
    C3, C4 = compound_matrices(xst)
    if alpha == 1.0:
        stack, weights = [C3], [1.0]
    elif alpha == 0.0:
        stack, weights = [C4], [1.0]
    else:
        stack, weights = [C3, C4], [alpha, 1.0 - alpha]
    res = joint_diagonalize(stack, weights=weights,
                            tol=min(opts.tol, 1e-10),
                            max_sweeps=max(opts.max_iter, 100))
    _spectrum_warning(alpha, xst, res.U, n)
    objective = res.objective
    _warn_if_degenerate(objective, p)
    W = _canonical_form(res.U, xst, st.whitener, alpha)
    return UnmixingEstimate(
        W=W, method="compound", alpha=alpha, iterations=[res.sweeps],
        converged=res.converged, objective=objective, restarts_used=1,
        objective_history=res.objective_history)


def all_cumulant(X, alpha, opts=None):
    """All-cumulant estimator (JADE family).

    Jointly diagonalizes every third-cumulant matrix (weight ``alpha``)
    and every fourth-cumulant matrix (weight ``1 - alpha``) of the
    standardized data.  ``alpha = 0`` reproduces classical JADE.
    """
    alpha = _check_alpha(alpha)
    opts = opts or SolverOptions()
    st = standardize(X)
    xst = st.xst
    n, p = xst.shape
    stack = []
    weights = []
    if alpha > 0.0:
        stack.extend(cum3_stack(xst))
        weights.extend([alpha] * p)
    if alpha < 1.0:
        c4, pairs = cum4_stack(xst)
        stack.extend(c4)
        # pairs (i, j) with i < j stand in for both (i, j) and (j, i).
        weights.extend((1.0 - alpha) * (1.0 if i == j else 2.0)
                       for i, j in pairs)
    res = joint_diagonalize(stack, weights=weights,
                            tol=min(opts.tol, 1e-10),
                            max_sweeps=max(opts.max_iter, 100))
    objective = res.objective
    _warn_if_degenerate(objective, p)
    W = _canonical_form(res.U, xst, st.whitener, alpha)
    return UnmixingEstimate(
        W=W, method="all_cumulant", alpha=alpha, iterations=[res.sweeps],
        converged=res.converged, objective=objective, restarts_used=1,
        objective_history=res.objective_history)
