"""Asymptotic variances of the unmixing estimators, in closed form.

For each method the limiting distribution of sqrt(n) (What - I) at the
identity mixing is multivariate normal; the tables built here hold the
elementwise asymptotic variances ASV(w_kl).  All methods share the
diagonal law ASV(w_kk) = (kappa_k + 2) / 4; the off-diagonal laws differ
and are driven by per-source zeta statistics combining the moment
profile entries.

The cluster-identification objective ``cluster_objective`` and its
minimizer ``optimal_alpha`` specialize the deflation off-diagonal law to
a two-point normal location mixture, where the interplay of vanishing
skewness (at mixing weight 1/2) and vanishing excess kurtosis (at weight
(3 - sqrt(3))/6) makes the optimal cumulant weighting nontrivial.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import MomentProfile, SourceSpec, moment_profile
from .errors import IndexOutOfRange, InvalidParams, ZeroDenominator

#: Relative floor below which a population skewness / excess kurtosis is
#: treated as an exact zero when testing denominators.
_SNAP = 1e-12


@dataclass(frozen=True)
class ZetaTriple:
    """The three quadratic-form coefficients of an ASV numerator."""

    zeta11: float
    zeta22: float
    zeta12: float


@dataclass
class AsvTable:
    """Elementwise asymptotic variances for one method and weight.

    Attributes
    ----------
    method : str
    alpha : float
    diag : (p,) ndarray
        ``diag[k]`` is ASV(w_kk) = (kappa_k + 2) / 4.
    offdiag : (p, p) ndarray
        ``offdiag[k, l]`` is ASV(w_kl) for k != l; the diagonal is 0.
    """

    method: str
    alpha: float
    diag: np.ndarray
    offdiag: np.ndarray


def _as_profiles(profiles):
    out = []
    for pr in profiles:
        if isinstance(pr, (str, SourceSpec)):
            pr = moment_profile(pr)
        if not isinstance(pr, MomentProfile):
            raise TypeError(f"expected a MomentProfile or source spec, "
                            f"got {type(pr).__name__}")
        out.append(pr)
    if not out:
        raise ValueError("need at least one source profile")
    return out


def _check_alpha(alpha):
    if not (0.0 <= alpha <= 1.0) or not math.isfinite(alpha):
        raise InvalidParams(f"alpha must be in [0, 1], got {alpha!r}")
    return float(alpha)


def _diag_law(prs):
    return np.array([(pr.kappa + 2.0) / 4.0 for pr in prs])


def zeta_deflation(pr):
    """Per-component zetas of the deflation-based off-diagonal law."""
    g, k = pr.gamma, pr.kappa
    return ZetaTriple(
        zeta11=g * g * (pr.nu - g * g),
        zeta22=k * k * (pr.omega - pr.beta * pr.beta),
        zeta12=g * k * (pr.eta - g * pr.beta),
    )


def zeta_pairwise(pk, pl):
    """Pairwise zetas shared by the symmetric and all-cumulant laws.

    Note the asymmetry: the closing terms involve only the second
    profile, so swapping the pair changes the value.
    """
    gk, kk = pk.gamma, pk.kappa
    gl, kl = pl.gamma, pl.kappa
    return ZetaTriple(
        zeta11=gk * gk * (pk.nu - gk * gk)
        + gl * gl * (pl.nu - gl * gl)
        + gl**4,
        zeta22=kk * kk * (pk.omega - pk.beta * pk.beta)
        + kl * kl * (pl.omega - pl.beta * pl.beta)
        + kl**4,
        zeta12=gk * kk * (pk.eta - gk * pk.beta)
        + gl * kl * (pl.eta - gl * pl.beta)
        + gl * gl * kl * kl,
    )


def zeta_compound(pk, pl, others):
    """Pairwise zetas of the compound-matrix law.

    ``others`` are the profiles of the remaining p - 2 components, whose
    moments enter through the trace structure of the compound matrices.
    """
    return ZetaTriple(
        zeta11=(pk.nu - pk.gamma**2) + (pl.nu - pl.gamma**2)
        + pl.gamma**2 + len(others),
        zeta22=(pk.omega - pk.beta**2) + (pl.omega - pl.beta**2)
        + pl.kappa**2 + sum(pm.beta - 1.0 for pm in others),
        zeta12=(pk.eta - pk.gamma * pk.beta) + (pl.eta - pl.gamma * pl.beta)
        + pl.gamma * pl.kappa + sum(pm.gamma for pm in others),
    )


def _quad_num(z, alpha, w1, w2):
    """w1^2 a^2 z11 + w2^2 b^2 z22 + 2 w1 w2 a b z12 for a=alpha, b=1-alpha."""
    a, b = w1 * alpha, w2 * (1.0 - alpha)
    return a * a * z.zeta11 + b * b * z.zeta22 + 2.0 * a * b * z.zeta12


def asv_deflation(profiles, alpha):
    """ASV table of the deflation-based projection pursuit estimator.

    The entry (k, l) with l > k depends only on component k's profile;
    with l < k it is the (l, k') formula evaluated at l's profile plus
    one (the extra unit comes from the orthogonalization against the
    already-extracted rows).
    """
    prs = _as_profiles(profiles)
    alpha = _check_alpha(alpha)
    p = len(prs)
    dens = [3.0 * alpha * pr.gamma**2 + 4.0 * (1.0 - alpha) * pr.kappa**2
            for pr in prs]
    bad = tuple(k for k, d in enumerate(dens) if d == 0.0)
    if bad:
        raise ZeroDenominator(
            f"deflation criterion vanishes for component(s) {list(bad)} at "
            f"alpha={alpha}", components=bad)
    base = [_quad_num(zeta_deflation(pr), alpha, 3.0, 4.0) / d**2
            for pr, d in zip(prs, dens)]
    off = np.zeros((p, p))
    for k in range(p):
        for l in range(p):
            if l > k:
                off[k, l] = base[k]
            elif l < k:
                off[k, l] = base[l] + 1.0
    return AsvTable("deflation", alpha, _diag_law(prs), off)


def asv_symmetric(profiles, alpha):
    """ASV table of the symmetric projection pursuit estimator."""
    prs = _as_profiles(profiles)
    alpha = _check_alpha(alpha)
    p = len(prs)
    off = np.zeros((p, p))
    for k in range(p):
        for l in range(p):
            if l == k:
                continue
            pk, pl = prs[k], prs[l]
            den = (3.0 * alpha * (pk.gamma**2 + pl.gamma**2)
                   + 4.0 * (1.0 - alpha) * (pk.kappa**2 + pl.kappa**2))
            if den == 0.0:
                raise ZeroDenominator(
                    f"symmetric criterion vanishes for pair ({k}, {l}) at "
                    f"alpha={alpha}", components=(k, l))
            off[k, l] = _quad_num(zeta_pairwise(pk, pl), alpha, 3.0, 4.0) / den**2
    return AsvTable("symmetric", alpha, _diag_law(prs), off)


def asv_compound(profiles, alpha, p=None):
    """ASV table of the compound cumulant-matrix estimator.

    ``p`` is the model dimension; it defaults to ``len(profiles)`` and,
    if given, must agree with it, since the remaining components' moments
    enter the formulas.
    """
    prs = _as_profiles(profiles)
    alpha = _check_alpha(alpha)
    if p is None:
        p = len(prs)
    if p != len(prs):
        raise InvalidParams(
            f"p={p} disagrees with the {len(prs)} supplied profiles")
    if p < 2:
        raise InvalidParams("compound ASV needs at least two components")
    off = np.zeros((p, p))
    for k in range(p):
        for l in range(p):
            if l == k:
                continue
            pk, pl = prs[k], prs[l]
            d1 = pk.gamma - pl.gamma
            d2 = pk.kappa - pl.kappa
            den = alpha * d1 * d1 + (1.0 - alpha) * d2 * d2
            if den == 0.0:
                raise ZeroDenominator(
                    f"compound eigenvalue gap vanishes for pair ({k}, {l}) "
                    f"at alpha={alpha}", components=(k, l))
            others = [prs[m] for m in range(p) if m != k and m != l]
            z = zeta_compound(pk, pl, others)
            a, b = alpha, 1.0 - alpha
            num = (a * a * d1 * d1 * z.zeta11
                   + b * b * d2 * d2 * z.zeta22
                   + 2.0 * a * b * d1 * d2 * z.zeta12)
            off[k, l] = num / den**2
    return AsvTable("compound", alpha, _diag_law(prs), off)


def asv_allcumulant(profiles, alpha):
    """ASV table of the all-cumulant (joint diagonalization) estimator.

    Shares the pairwise zetas with ``asv_symmetric``; the two tables
    coincide exactly under the weight map ``jade_weight_map``.
    """
    prs = _as_profiles(profiles)
    alpha = _check_alpha(alpha)
    p = len(prs)
    off = np.zeros((p, p))
    for k in range(p):
        for l in range(p):
            if l == k:
                continue
            pk, pl = prs[k], prs[l]
            den = (alpha * (pk.gamma**2 + pl.gamma**2)
                   + (1.0 - alpha) * (pk.kappa**2 + pl.kappa**2))
            if den == 0.0:
                raise ZeroDenominator(
                    f"all-cumulant criterion vanishes for pair ({k}, {l}) at "
                    f"alpha={alpha}", components=(k, l))
            off[k, l] = _quad_num(zeta_pairwise(pk, pl), alpha, 1.0, 1.0) / den**2
    return AsvTable("all_cumulant", alpha, _diag_law(prs), off)


def jade_weight_map(alpha_j):
    """Map an all-cumulant weight to the equivalent symmetric PP weight.

    ``asv_allcumulant(profiles, a)`` equals
    ``asv_symmetric(profiles, jade_weight_map(a))`` entrywise.
    """
    alpha_j = _check_alpha(alpha_j)
    return 4.0 * alpha_j / (3.0 + alpha_j)


def offdiag_criterion(table, k, l):
    """The pair criterion ASV(w_kl) + ASV(w_lk) from an AsvTable."""
    p = table.offdiag.shape[0]
    for name, i in (("k", k), ("l", l)):
        if not (0 <= i < p):
            raise IndexOutOfRange(f"index {name}={i} out of range for p={p}")
    if k == l:
        raise IndexOutOfRange(f"need two distinct components, got k=l={k}")
    return float(table.offdiag[k, l] + table.offdiag[l, k])


def _snap(value, scale):
    return 0.0 if abs(value) <= _SNAP * scale else value


def _mixture_profile_snapped(pi, mu):
    if not (0.0 < pi < 1.0):
        raise InvalidParams(f"mixing weight must be in (0, 1), got {pi!r}")
    if mu == 0.0 or not math.isfinite(mu):
        raise InvalidParams(f"location shift must be nonzero, got {mu!r}")
    pr = moment_profile(SourceSpec("mix", (float(pi), float(mu))))
    # Snap skewness/kurtosis that are zero in exact arithmetic (pi = 1/2,
    # or pi at the kurtosis root) so pole detection is not at the mercy
    # of rounding in the moment recursion.
    gamma = _snap(pr.gamma, max(1.0, math.sqrt(pr.beta)))
    kappa = _snap(pr.kappa, max(1.0, pr.beta))
    return MomentProfile(gamma=gamma, beta=pr.beta, kappa=kappa,
                         nu=pr.nu, omega=pr.omega, eta=pr.eta)


def cluster_objective(alpha, pi, mu):
    """Deflation-law variance f(alpha) for a two-point normal mixture.

    Evaluates the (k, l), l > k off-diagonal deflation formula at the
    standardized mixture pi N(0,1) + (1-pi) N(mu,1).  Where the
    denominator vanishes (the skewness-only weight at pi = 1/2, or the
    kurtosis-only weight at the vanishing-excess-kurtosis weight), the
    variance diverges and ``math.inf`` is returned as a signaled value
    rather than raising.
    """
    alpha = _check_alpha(alpha)
    pr = _mixture_profile_snapped(pi, mu)
    den = 3.0 * alpha * pr.gamma**2 + 4.0 * (1.0 - alpha) * pr.kappa**2
    if den == 0.0:
        return math.inf
    return _quad_num(zeta_deflation(pr), alpha, 3.0, 4.0) / den**2


def optimal_alpha(pi, mu, grid_tol=1e-3):
    """Global minimizer of ``cluster_objective`` over alpha in [0, 1].

    A dense grid scan (step ``grid_tol``) locates the best bracket, then
    golden-section refinement narrows it to width 1e-8.  Plateaus are
    resolved toward the smallest alpha: a candidate replaces the
    incumbent only on strict relative improvement, so e.g. at pi = 1/2
    (where f is constant for alpha < 1) the minimizer reported is 0.

    Returns
    -------
    (alpha_star, f_star)
    """
    if not (0.0 < grid_tol <= 0.5):
        raise InvalidParams(f"grid_tol must be in (0, 0.5], got {grid_tol!r}")
    pr = _mixture_profile_snapped(pi, mu)

    def f(alpha):
        den = 3.0 * alpha * pr.gamma**2 + 4.0 * (1.0 - alpha) * pr.kappa**2
        if den == 0.0:
            return math.inf
        return _quad_num(zeta_deflation(pr), alpha, 3.0, 4.0) / den**2

    steps = max(2, round(1.0 / grid_tol))
    grid = np.linspace(0.0, 1.0, steps + 1)
    best_i, best_f = 0, f(grid[0])
    for i in range(1, len(grid)):
        fi = f(grid[i])
        if fi < best_f * (1.0 - 1e-12):
            best_i, best_f = i, fi
    alpha_star = float(grid[best_i])

    lo = float(grid[max(0, best_i - 1)])
    hi = float(grid[min(len(grid) - 1, best_i + 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-8:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    refined = 0.5 * (a + b)
    f_refined = f(refined)
    if f_refined < best_f * (1.0 - 1e-12):
        alpha_star, best_f = refined, f_refined
    return float(alpha_star), float(best_f)


def stat_covariance_table(profile_k, profile_l, profile_m):
    """Limiting covariance matrix of the seven moment statistics.

    The statistic vector, in order, is

        (q_kl, q_lk, r_kl, r_lk, q_{m'kl}, r_{mkl}, s_kl)

    for distinct components k, l, m (and m' sharing m's profile), where
    q, r, s are the sqrt(n)-scaled sample fourth, third and second
    cross-moments of the standardized sources.
    """
    pk, pl, pm = (moment_profile(pr) if isinstance(pr, (str, SourceSpec))
                  else pr for pr in (profile_k, profile_l, profile_m))
    C = np.zeros((7, 7))
    upper = {
        (0, 0): pk.omega, (0, 1): pk.beta * pl.beta, (0, 2): pk.eta,
        (0, 3): pk.beta * pl.gamma, (0, 4): pk.beta, (0, 5): 0.0,
        (0, 6): pk.beta,
        (1, 1): pl.omega, (1, 2): pl.beta * pk.gamma, (1, 3): pl.eta,
        (1, 4): pl.beta, (1, 5): 0.0, (1, 6): pl.beta,
        (2, 2): pk.nu, (2, 3): pk.gamma * pl.gamma, (2, 4): pk.gamma,
        (2, 5): 0.0, (2, 6): pk.gamma,
        (3, 3): pl.nu, (3, 4): pl.gamma, (3, 5): 0.0, (3, 6): pl.gamma,
        (4, 4): pm.beta, (4, 5): 0.0, (4, 6): 1.0,
        (5, 5): 1.0, (5, 6): 0.0,
        (6, 6): 1.0,
    }
    for (i, j), v in upper.items():
        C[i, j] = v
        C[j, i] = v
    return C
