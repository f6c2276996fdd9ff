"""IC-model sampling, performance scoring, and Monte Carlo validation.

The Monte Carlo harness draws replicated samples from an IC model with
identity mixing (affine equivariance of the estimators makes this
without loss of generality), aligns each estimate to the identity by
the optimal signed permutation, and compares the scaled empirical
variances n*Var(w_kl) against the analytic asymptotic variances.

Seeding discipline: a run takes one master seed; per-replication
generators are derived through ``numpy.random.SeedSequence.spawn``
before any work is dispatched, so results are bitwise identical
whatever the worker parallelism.
"""

import io
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import asymptotics
from .distributions import SourceSpec, moment_profile, sample_source
from .errors import (AssumptionViolated, InvalidSpec, SingularInput,
                     TooManyFailures)
from .estimators import (SolverOptions, all_cumulant, compound_cumulant,
                         deflation_pp, symmetric_pp)

_MAX_CONDITION = 1e8

_ESTIMATORS = {
    "deflation": deflation_pp,
    "symmetric": symmetric_pp,
    "compound": compound_cumulant,
    "all_cumulant": all_cumulant,
}

_ASV_TABLES = {
    "deflation": asymptotics.asv_deflation,
    "symmetric": asymptotics.asv_symmetric,
    "compound": asymptotics.asv_compound,
    "all_cumulant": asymptotics.asv_allcumulant,
}


@dataclass
class IcModelSpec:
    """An independent component model x = shift + Omega z.

    Attributes
    ----------
    sources : sequence of SourceSpec or spec strings
        Marginal distributions of the p independent sources.
    mixing : "identity", (p, p) array_like, or ("random", seed)
        The mixing matrix, a recipe for drawing one, or the identity.
    shift : (p,) array_like or None
        Location vector (default zero).
    """

    sources: tuple
    mixing: object = "identity"
    shift: object = None

    def __post_init__(self):
        parsed = tuple(SourceSpec.parse(s) if isinstance(s, str) else s
                       for s in self.sources)
        if not parsed:
            raise InvalidSpec("model needs at least one source")
        self.sources = parsed
        p = len(parsed)
        if isinstance(self.mixing, str):
            if self.mixing != "identity":
                raise InvalidSpec(f"unknown mixing: {self.mixing!r}")
        elif (isinstance(self.mixing, tuple) and len(self.mixing) == 2
              and self.mixing[0] == "random"):
            pass
        else:
            M = np.asarray(self.mixing, dtype=float)
            if M.shape != (p, p):
                raise InvalidSpec(f"mixing matrix must be {p}x{p}, "
                                  f"got {M.shape}")
            if not np.all(np.isfinite(M)) or np.linalg.cond(M) >= _MAX_CONDITION:
                raise InvalidSpec("mixing matrix is not numerically full rank")
            self.mixing = M
        if self.shift is not None:
            b = np.asarray(self.shift, dtype=float)
            if b.shape != (p,):
                raise InvalidSpec(f"shift must have length {p}, got {b.shape}")
            self.shift = b

    @property
    def p(self):
        return len(self.sources)

    def mixing_matrix(self):
        """Resolve the mixing recipe to a concrete matrix."""
        p = self.p
        if isinstance(self.mixing, str):
            return np.eye(p)
        if isinstance(self.mixing, tuple):
            rng = np.random.default_rng(self.mixing[1])
            while True:
                M = rng.standard_normal((p, p))
                if np.linalg.cond(M) < _MAX_CONDITION:
                    return M
        return np.array(self.mixing, dtype=float)

    def profiles(self):
        return [moment_profile(s) for s in self.sources]


def generate_ic_sample(model, n, stream):
    """Draw one sample from the model.

    Returns ``(X, Omega, Z)`` with ``X = shift + Z @ Omega.T`` rowwise.
    Source columns are drawn sequentially from ``stream``, so a fixed
    seed pins the whole sample.
    """
    if not isinstance(model, IcModelSpec):
        model = IcModelSpec(sources=tuple(model))
    p = model.p
    if n <= p:
        raise InvalidSpec(f"need n > p, got n={n}, p={p}")
    Z = np.column_stack([sample_source(s, n, stream) for s in model.sources])
    Omega = model.mixing_matrix()
    X = Z @ Omega.T
    if model.shift is not None:
        X = X + model.shift
    return X, Omega, Z


def mdi(W, Omega):
    """Minimum distance index between an unmixing estimate and the truth.

    Computes ``(p-1)^{-1/2} * min_C ||C W Omega - I||_F`` over matrices C
    with exactly one nonzero entry per row and column: the gain matrix
    ``G = W Omega`` is row-normalized, the component assignment is solved
    as a linear assignment problem on squared magnitudes, and each
    matched row's scale is then optimal in closed form.  The result lies
    in [0, 1]; 0 exactly when W Omega is a scaled signed permutation.
    """
    W = np.asarray(W, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    p = W.shape[0]
    if W.shape != (p, p) or Omega.shape != (p, p):
        raise ValueError("mdi needs two square matrices of equal size")
    G = W @ Omega
    if not np.all(np.isfinite(G)):
        raise SingularInput("gain matrix has non-finite entries")
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularInput("gain matrix W @ Omega is numerically singular")
    if p == 1:
        return 0.0
    H = (G * G) / (G * G).sum(axis=1, keepdims=True)
    # H[j, i]: fraction of row j's energy in column i; the best one-
    # nonzero-per-row-and-column C keeps, for each matched pair, exactly
    # that fraction.
    rows, cols = linear_sum_assignment(-H)
    matched = H[rows, cols].sum()
    return math.sqrt(max(0.0, p - matched) / (p - 1))


def align_signed_permutation(W, target=None):
    """Permute and sign the rows of W to best match ``target`` (default I).

    Returns the aligned matrix ``P J W`` where the signed permutation
    minimizes the Frobenius distance to the target.
    """
    W = np.asarray(W, dtype=float)
    p = W.shape[0]
    if target is None:
        target = np.eye(p)
    # Minimizing ||s_i W[j] - target[i]||^2 over the assignment j -> i
    # and signs reduces to maximizing sum |<W[j], target[i]>|.
    M = W @ np.asarray(target, dtype=float).T  # M[j, i]
    rows, cols = linear_sum_assignment(-np.abs(M))
    aligned = np.empty_like(W)
    for j, i in zip(rows, cols):
        s = 1.0 if M[j, i] >= 0 else -1.0
        aligned[i] = s * W[j]
    return aligned


def _zero(x, tol):
    return abs(x) <= tol


def check_assumptions(model, method, alpha, tol=1e-12):
    """Verify the identifiability assumption the method needs at this alpha.

    Raises AssumptionViolated (carrying the assumption number) when the
    model's population moments break it; returns the checked assumption
    number otherwise.  The projection pursuit and all-cumulant methods
    need zero-cumulant conditions (at most one source without signal);
    the compound method needs distinctness conditions.
    """
    if isinstance(model, IcModelSpec):
        profs = model.profiles()
    else:
        profs = [moment_profile(s) if isinstance(s, (str, SourceSpec)) else s
                 for s in model]
    method = canonical_method(method)
    if not (0.0 <= alpha <= 1.0):
        raise InvalidSpec(f"alpha must be in [0, 1], got {alpha!r}")
    gammas = [pr.gamma for pr in profs]
    kappas = [pr.kappa for pr in profs]
    p = len(profs)

    if method in ("deflation", "symmetric", "all_cumulant"):
        if alpha == 1.0:
            number = 3
            if sum(_zero(g, tol) for g in gammas) > 1:
                raise AssumptionViolated(
                    number, "more than one source has zero skewness")
        elif alpha == 0.0:
            number = 4
            if sum(_zero(k, tol) for k in kappas) > 1:
                raise AssumptionViolated(
                    number, "more than one source has zero excess kurtosis")
        else:
            number = 7
            both = sum(_zero(g, tol) and _zero(k, tol)
                       for g, k in zip(gammas, kappas))
            if both > 1:
                raise AssumptionViolated(
                    number, "more than one source has zero skewness and "
                    "zero excess kurtosis")
    elif method == "compound":
        if alpha == 1.0:
            number = 5
            for a in range(p - 1):
                for b in range(a + 1, p):
                    if _zero(gammas[a] - gammas[b], tol):
                        raise AssumptionViolated(
                            number, f"sources {a} and {b} have equal skewness")
        elif alpha == 0.0:
            number = 6
            for a in range(p - 1):
                for b in range(a + 1, p):
                    if _zero(kappas[a] - kappas[b], tol):
                        raise AssumptionViolated(
                            number,
                            f"sources {a} and {b} have equal excess kurtosis")
        else:
            number = 8
            for a in range(p - 1):
                for b in range(a + 1, p):
                    if (_zero(gammas[a] - gammas[b], tol)
                            and _zero(kappas[a] - kappas[b], tol)):
                        raise AssumptionViolated(
                            number, f"sources {a} and {b} have equal skewness "
                            f"and equal excess kurtosis")
    else:  # pragma: no cover - canonical_method rejects unknown names
        raise InvalidSpec(f"unknown method: {method!r}")
    return number


def canonical_method(method):
    """Resolve method aliases: jade -> all_cumulant, fobi -> compound."""
    name = str(method).lower().replace("-", "_")
    if name == "jade":
        return "all_cumulant"
    if name == "fobi":
        return "compound"
    if name not in _ESTIMATORS:
        raise InvalidSpec(
            f"unknown method {method!r}; expected one of "
            f"{sorted(_ESTIMATORS)} or aliases 'jade', 'fobi'")
    return name


def _fmt(x):
    """Shortest round-trip decimal for CSV cells."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class McResult:
    """Aggregated Monte Carlo output for one configuration."""

    method: str
    alpha: float
    n: int
    replications: int
    sources: tuple
    n_var: np.ndarray
    asv: np.ndarray
    rel_err: np.ndarray
    mdi_mean: float
    mdi_median: float
    mdi_max: float
    failures: int
    wall_clock: float
    master_seed: object

    def to_csv(self, path_or_file=None):
        """Serialize as CSV (one row per matrix entry); returns the text."""
        buf = io.StringIO()
        srcs = ",".join(str(s) for s in self.sources)
        buf.write(f"# monte carlo: method={self.method} alpha={_fmt(self.alpha)} "
                  f"n={self.n} reps={self.replications} seed={self.master_seed}\n")
        buf.write(f"# sources: {srcs}\n")
        buf.write(f"# mdi: mean={_fmt(self.mdi_mean)} "
                  f"median={_fmt(self.mdi_median)} max={_fmt(self.mdi_max)}\n")
        buf.write(f"# failures: {self.failures}\n")
        buf.write("method,alpha,n,reps,k,l,n_var,asv,rel_err\n")
        p = self.n_var.shape[0]
        for k in range(p):
            for l in range(p):
                buf.write(",".join([
                    self.method, _fmt(self.alpha), str(self.n),
                    str(self.replications), str(k), str(l),
                    _fmt(float(self.n_var[k, l])),
                    _fmt(float(self.asv[k, l])),
                    _fmt(float(self.rel_err[k, l])),
                ]) + "\n")
        text = buf.getvalue()
        if path_or_file is not None:
            if hasattr(path_or_file, "write"):
                path_or_file.write(text)
            else:
                with open(path_or_file, "w") as fh:
                    fh.write(text)
        return text


def resolve_threads(threads=None):
    """Worker count: explicit argument, CUMICA_THREADS, then cpu count."""
    if threads is None:
        env = os.environ.get("CUMICA_THREADS", "").strip()
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise InvalidSpec(f"threads must be >= 1, got {threads}")
    return threads


def _estimate_once(method, X, alpha, opts):
    fn = _ESTIMATORS[method]
    return fn(X, alpha, opts=opts)


def _run_replication(args):
    """One Monte Carlo replication; must stay a top-level function so the
    process pool can pickle it."""
    sources, method, alpha, n, child_seed, opts = args
    child = np.random.SeedSequence(entropy=child_seed[0],
                                   spawn_key=tuple(child_seed[1]))
    data_ss, solver_ss = child.spawn(2)
    rng = np.random.default_rng(data_ss)
    model = IcModelSpec(sources=sources, mixing="identity")
    X, Omega, _ = generate_ic_sample(model, n, rng)
    opts = replace(opts, seed=int(solver_ss.generate_state(1)[0]))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = _estimate_once(method, X, alpha, opts)
    except Exception as exc:  # noqa: BLE001 - failure accounting
        return ("error", type(exc).__name__, None, None)
    if not est.converged:
        return ("unconverged", None, None, None)
    aligned = align_signed_permutation(est.W @ Omega)
    score = mdi(est.W, Omega)
    return ("ok", None, aligned, score)


def monte_carlo_experiment(model, method, alpha, n, replications,
                           master_seed=0, opts=None, threads=None):
    """Estimate n*Var of every unmixing entry over replicated samples.

    Parameters
    ----------
    model : IcModelSpec or sequence of source specs
        Only the sources matter: replications always use identity mixing
        (the estimators are affine equivariant, so this is without loss
        of generality).
    method : str
        "deflation", "symmetric", "compound", "all_cumulant" (aliases
        "jade", "fobi" accepted; "fobi" forces alpha = 0).
    master_seed : int or numpy.random.SeedSequence
        Source of all randomness; per-replication seeds are spawned from
        it deterministically.
    threads : int or None
        Worker processes; None consults CUMICA_THREADS then cpu count.

    Raises
    ------
    AssumptionViolated
        When the model's population moments break the assumption the
        method needs at this alpha.
    TooManyFailures
        When more than 1% of replications fail or do not converge.
    """
    t0 = time.perf_counter()
    if not isinstance(model, IcModelSpec):
        model = IcModelSpec(sources=tuple(model))
    raw_method = str(method).lower().replace("-", "_")
    method = canonical_method(method)
    if raw_method == "fobi":
        # the compound estimator resolves its default standardizer to the
        # kurtosis-weighted scatter exactly when alpha == 0
        alpha = 0.0
    alpha = float(alpha)
    if replications < 2:
        raise InvalidSpec("need at least two replications")
    check_assumptions(model, method, alpha)
    profiles = model.profiles()
    table = _ASV_TABLES[method](profiles, alpha)
    p = model.p
    asv = table.offdiag + np.diag(table.diag)

    opts = opts or SolverOptions()
    if isinstance(master_seed, np.random.SeedSequence):
        root = master_seed
    else:
        root = np.random.SeedSequence(master_seed)
    children = root.spawn(replications)
    jobs = [(tuple(str(s) for s in model.sources), method, alpha, n,
             (child.entropy, list(child.spawn_key)), opts)
            for child in children]

    threads = min(resolve_threads(threads), replications)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_replication, jobs, chunksize=8))
    else:
        outcomes = [_run_replication(job) for job in jobs]

    mats = [aligned for status, _, aligned, _ in outcomes if status == "ok"]
    scores = [s for status, _, _, s in outcomes if status == "ok"]
    failures = replications - len(mats)
    if failures > 0.01 * replications:
        kinds = sorted({name for status, name, _, _ in outcomes
                        if status == "error" and name})
        raise TooManyFailures(
            f"{failures}/{replications} replications failed or did not "
            f"converge" + (f" (errors: {', '.join(kinds)})" if kinds else ""))

    stack = np.stack(mats)
    n_var = n * stack.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(asv != 0.0, (n_var - asv) / asv, np.nan)
    scores = np.array(scores)
    return McResult(
        method=method, alpha=alpha, n=int(n), replications=int(replications),
        sources=tuple(str(s) for s in model.sources),
        n_var=n_var, asv=asv, rel_err=rel,
        mdi_mean=float(scores.mean()), mdi_median=float(np.median(scores)),
        mdi_max=float(scores.max()), failures=int(failures),
        wall_clock=time.perf_counter() - t0, master_seed=master_seed)


@dataclass
class ContourGrid:
    """Grid of pair criteria ASV(w_12) + ASV(w_21) over two source families."""

    method: str
    alpha: float
    family_x: str
    family_y: str
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray  # values[i, j] for (x_values[i], y_values[j]); NaN missing

    def to_csv(self, path_or_file=None):
        buf = io.StringIO()
        buf.write(f"# contour: method={self.method} alpha={_fmt(self.alpha)} "
                  f"family_x={self.family_x} family_y={self.family_y}\n")
        buf.write("# x: " + ",".join(_fmt(float(v)) for v in self.x_values) + "\n")
        buf.write("# y: " + ",".join(_fmt(float(v)) for v in self.y_values) + "\n")
        buf.write("# columns k,l index x and y; asv holds the pair criterion\n")
        buf.write("method,alpha,n,reps,k,l,n_var,asv,rel_err\n")
        for i in range(len(self.x_values)):
            for j in range(len(self.y_values)):
                buf.write(",".join([
                    self.method, _fmt(self.alpha), "0", "0", str(i), str(j),
                    "nan", _fmt(float(self.values[i, j])), "nan",
                ]) + "\n")
        text = buf.getvalue()
        if path_or_file is not None:
            if hasattr(path_or_file, "write"):
                path_or_file.write(text)
            else:
                with open(path_or_file, "w") as fh:
                    fh.write(text)
        return text


def contour_grid(family_x, range_x, family_y, range_y, method, alpha,
                 steps=40):
    """Pair criterion over a parameter grid of two one-parameter families.

    Cells whose profiles do not exist or whose ASV denominators vanish
    are recorded as NaN rather than failing the whole grid.
    """
    method = canonical_method(method)
    table_fn = _ASV_TABLES[method]
    lo_x, hi_x = map(float, range_x)
    lo_y, hi_y = map(float, range_y)
    if steps < 2:
        raise InvalidSpec("need at least 2 grid steps")
    xs = np.linspace(lo_x, hi_x, steps)
    ys = np.linspace(lo_y, hi_y, steps)
    vals = np.full((steps, steps), np.nan)
    for i, xv in enumerate(xs):
        for j, yv in enumerate(ys):
            try:
                pk = moment_profile(f"{family_x}:{float(xv)!r}")
                pl = moment_profile(f"{family_y}:{float(yv)!r}")
                table = table_fn([pk, pl], alpha)
                vals[i, j] = asymptotics.offdiag_criterion(table, 0, 1)
            except Exception:  # noqa: BLE001 - cell-level missing marker
                continue
    return ContourGrid(method=method, alpha=float(alpha),
                       family_x=family_x, family_y=family_y,
                       x_values=xs, y_values=ys, values=vals)


def read_config(path):
    """Parse a plain-text ``key = value`` experiment config file.

    Blank lines and '#' comments are ignored; values stay strings for
    the caller to coerce.
    """
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidSpec(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
