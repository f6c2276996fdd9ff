"""Command-line front-end for estimation, simulation, and asymptotic tables.

One subcommand per invocation::

    cumica estimate --in data.csv --method symmetric --alpha 0.8
    cumica simulate --sources gamma:1,gamma:2,gamma:4 --method jade \
        --alpha 0.8 --n 10000 --reps 1000
    cumica asv --method symmetric --alpha 1.0 --sources gamma:1,gamma:1
    cumica optimal-alpha --pi 0.3 --mu 5
    cumica contour --family-x gamma --range-x 0.5:8 --family-y gamma \
        --range-y 0.5:8 --method compound --alpha 0.5
    cumica check-assumptions --sources gamma:1,ep:4 --method deflation --alpha 1

Exit codes: 0 success, 1 usage error, 2 numerical or assumption error.
Every run echoes its resolved configuration as a leading '#' comment, and
all numeric CSV cells round-trip exactly through ``float()``.
"""

import argparse
import sys

import numpy as np

from .asymptotics import (asv_allcumulant, asv_compound, asv_deflation,
                          asv_symmetric, optimal_alpha)
from .errors import CumicaError
from .estimators import (SolverOptions, all_cumulant, compound_cumulant,
                         deflation_pp, symmetric_pp)
from .simulation import (IcModelSpec, canonical_method, check_assumptions,
                         contour_grid, generate_ic_sample,
                         monte_carlo_experiment, read_config)

_GRAMMAR = """\
usage: cumica <command> [flags]

commands:
  estimate           --in FILE --method {deflation,symmetric,compound,jade,fobi}
                     --alpha A [--standardizer {symmetric,fobi}] [--tol T]
                     [--restarts R] [--seed S] [--out FILE]
  simulate           --sources SPECS --method M --alpha A --n N --reps R
                     [--seed S] [--mixing {identity,random}] [--emit-data]
                     [--threads K] [--config FILE] [--out FILE]
  asv                --method M --alpha A --sources SPECS [--out FILE]
  optimal-alpha      --pi P --mu M [--grid STEP]
  contour            --family-x F --range-x LO:HI --family-y F --range-y LO:HI
                     --method M --alpha A [--steps N]
  check-assumptions  --sources SPECS --method M --alpha A

SPECS is a comma-separated list of source distributions, e.g.
gamma:2,ep:4,mix:0.3:5,normal.  Ranges are LO:HI.  --config names a
key = value file supplying any simulate flag not given on the line.
"""

_ASV_FUNCS = {
    "deflation": asv_deflation,
    "symmetric": asv_symmetric,
    "compound": asv_compound,
    "all_cumulant": asv_allcumulant,
}

_CSV_HEADER = "method,alpha,n,reps,k,l,n_var,asv,rel_err"


class UsageError(Exception):
    """Bad command line or config file; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse variant that defers error handling to main()."""

    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _echo(command, **resolved):
    """The '# cumica <command>: key=value ...' configuration banner."""
    parts = [f"{k}={_fmt(v)}" for k, v in resolved.items() if v is not None]
    return f"# cumica {command}: " + " ".join(parts) + "\n"


def _parse_range(text):
    lo, sep, hi = text.partition(":")
    if not sep or not hi:
        raise argparse.ArgumentTypeError(
            f"expected LO:HI, got {text!r}")
    try:
        bounds = (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected numeric LO:HI, got {text!r}") from None
    return bounds


def _split_sources(text):
    specs = tuple(s.strip() for s in str(text).split(",") if s.strip())
    if not specs:
        raise UsageError("--sources needs at least one distribution spec")
    return specs


def _load_matrix(path):
    """Read a data matrix: comma-separated, optional header, '#' comments."""
    try:
        return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError:
        return np.loadtxt(path, delimiter=",", comments="#", skiprows=1,
                          ndmin=2)


def _write_output(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _resolve_alias(method, alpha, standardizer):
    """Apply the method aliases to (canonical name, alpha, standardizer).

    "jade" names the all-cumulant estimator; "fobi" forces the compound
    estimator with alpha = 0 and the FOBI standardizer.
    """
    raw = str(method).lower().replace("-", "_")
    name = canonical_method(raw)
    if raw == "fobi":
        return name, 0.0, "fobi"
    return name, alpha, standardizer


def _cmd_estimate(args):
    name, alpha, standardizer = _resolve_alias(args.method, args.alpha,
                                               args.standardizer)
    if standardizer is not None and name != "compound":
        raise UsageError("--standardizer applies to the compound method only")
    opts = SolverOptions(tol=args.tol, restarts=args.restarts, seed=args.seed)
    X = _load_matrix(args.infile)
    if name == "deflation":
        est = deflation_pp(X, alpha, opts)
    elif name == "symmetric":
        est = symmetric_pp(X, alpha, opts)
    elif name == "compound":
        est = compound_cumulant(X, alpha, standardizer=standardizer,
                                opts=opts)
    else:
        est = all_cumulant(X, alpha, opts)
    lines = [_echo("estimate", method=name, alpha=alpha,
                   standardizer=standardizer, tol=opts.tol,
                   restarts=opts.restarts, seed=opts.seed,
                   infile=args.infile)]
    iters = ",".join(str(i) for i in est.iterations)
    lines.append(f"# converged={est.converged} iterations={iters} "
                 f"objective={est.objective!r} "
                 f"restarts_used={est.restarts_used}\n")
    for row in est.W:
        lines.append(",".join(repr(float(v)) for v in row) + "\n")
    return "".join(lines)


_SIMULATE_KEYS = ("sources", "method", "alpha", "n", "reps", "seed",
                  "mixing", "emit_data", "threads", "out")


def _merge_config(args):
    """Fill simulate flags that were not given from --config, then defaults."""
    cfg = read_config(args.config) if args.config else {}
    unknown = set(cfg) - set(_SIMULATE_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}; "
                         f"expected a subset of {list(_SIMULATE_KEYS)}")
    coerce = {"alpha": float, "n": int, "reps": int, "seed": int,
              "threads": int,
              "emit_data": lambda s: s.lower() in ("1", "true", "yes")}
    for key in _SIMULATE_KEYS:
        if getattr(args, key) is None and key in cfg:
            try:
                value = coerce.get(key, str)(cfg[key])
            except ValueError:
                raise UsageError(
                    f"config key {key} has bad value {cfg[key]!r}") from None
            setattr(args, key, value)
    if args.seed is None:
        args.seed = 0
    if args.mixing is None:
        args.mixing = "identity"
    if args.emit_data is None:
        args.emit_data = False
    if args.mixing not in ("identity", "random"):
        raise UsageError(f"--mixing must be identity or random, "
                         f"got {args.mixing!r}")


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names
               if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required flags: " + ", ".join(missing))


def _build_model(sources, mixing, seed):
    if mixing == "random":
        return IcModelSpec(sources=sources, mixing=("random", int(seed)))
    return IcModelSpec(sources=sources)


def _cmd_simulate(args):
    _merge_config(args)
    _require(args, "sources")
    specs = _split_sources(args.sources)
    if args.emit_data:
        _require(args, "n")
        model = _build_model(specs, args.mixing, args.seed)
        # replication 0 of a Monte Carlo run with the same seed sees
        # exactly this dataset
        data_ss = np.random.SeedSequence(args.seed).spawn(1)[0].spawn(2)[0]
        X, omega, _ = generate_ic_sample(model, args.n,
                                         np.random.default_rng(data_ss))
        lines = [_echo("simulate", sources=",".join(specs), n=args.n,
                       seed=args.seed, mixing=args.mixing, emit_data=True)]
        flat = ",".join(repr(float(v)) for v in omega.ravel())
        lines.append(f"# omega: {flat}\n")
        for row in X:
            lines.append(",".join(format(v, ".17g") for v in row) + "\n")
        return "".join(lines)
    _require(args, "method", "alpha", "n", "reps")
    model = _build_model(specs, args.mixing, args.seed)
    res = monte_carlo_experiment(model, args.method, args.alpha, args.n,
                                 args.reps, master_seed=args.seed,
                                 threads=args.threads)
    banner = _echo("simulate", method=res.method, alpha=res.alpha, n=res.n,
                   reps=res.replications, seed=args.seed, mixing=args.mixing,
                   threads=args.threads)
    return banner + res.to_csv()


def _cmd_asv(args):
    name, alpha, _ = _resolve_alias(args.method, args.alpha, None)
    specs = _split_sources(args.sources)
    table = _ASV_FUNCS[name](list(specs), alpha)
    p = table.diag.shape[0]
    lines = [_echo("asv", method=name, alpha=alpha,
                   sources=",".join(specs)),
             _CSV_HEADER + "\n"]
    for k in range(p):
        for l in range(p):
            value = table.diag[k] if k == l else table.offdiag[k, l]
            lines.append(f"{name},{alpha!r},0,0,{k},{l},nan,"
                         f"{float(value)!r},nan\n")
    return "".join(lines)


def _cmd_optimal_alpha(args):
    star, value = optimal_alpha(args.pi, args.mu, grid_tol=args.grid)
    return (_echo("optimal-alpha", pi=args.pi, mu=args.mu, grid=args.grid)
            + f"# alpha_star = {star!r}\n"
            + "alpha_star,criterion\n"
            + f"{star!r},{value!r}\n")


def _cmd_contour(args):
    grid = contour_grid(args.family_x, args.range_x, args.family_y,
                        args.range_y, args.method, args.alpha,
                        steps=args.steps)
    banner = _echo("contour", method=grid.method, alpha=grid.alpha,
                   family_x=args.family_x,
                   range_x="%r:%r" % args.range_x,
                   family_y=args.family_y,
                   range_y="%r:%r" % args.range_y,
                   steps=args.steps)
    return banner + grid.to_csv()


def _cmd_check_assumptions(args):
    specs = _split_sources(args.sources)
    model = IcModelSpec(sources=specs)
    number = check_assumptions(model, args.method, args.alpha)
    return (_echo("check-assumptions", method=args.method, alpha=args.alpha,
                  sources=",".join(specs))
            + "assumption,satisfied\n"
            + f"{number},true\n")


def _build_parser():
    parser = _Parser(prog="cumica", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    methods = ["deflation", "symmetric", "compound", "jade", "fobi"]

    est = sub.add_parser("estimate", help="unmix a CSV data matrix")
    est.add_argument("--in", dest="infile", required=True)
    est.add_argument("--method", required=True, choices=methods)
    est.add_argument("--alpha", type=float, required=True)
    est.add_argument("--standardizer", choices=["symmetric", "fobi"])
    est.add_argument("--tol", type=float, default=1e-9)
    est.add_argument("--restarts", type=int, default=10)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out")
    est.set_defaults(func=_cmd_estimate)

    sim = sub.add_parser("simulate",
                         help="Monte Carlo validation, or --emit-data")
    sim.add_argument("--sources")
    sim.add_argument("--method", choices=methods)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--n", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--mixing", choices=["identity", "random"])
    sim.add_argument("--emit-data", dest="emit_data", action="store_const",
                     const=True, default=None)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--config")
    sim.add_argument("--out")
    sim.set_defaults(func=_cmd_simulate)

    asv = sub.add_parser("asv", help="analytic asymptotic-variance table")
    asv.add_argument("--method", required=True, choices=methods)
    asv.add_argument("--alpha", type=float, required=True)
    asv.add_argument("--sources", required=True)
    asv.add_argument("--out")
    asv.set_defaults(func=_cmd_asv)

    opt = sub.add_parser("optimal-alpha",
                         help="best weight for a normal location mixture")
    opt.add_argument("--pi", type=float, required=True)
    opt.add_argument("--mu", type=float, required=True)
    opt.add_argument("--grid", type=float, default=1e-3)
    opt.set_defaults(func=_cmd_optimal_alpha, out=None)

    con = sub.add_parser("contour",
                         help="pair criterion over a parameter grid")
    con.add_argument("--family-x", required=True)
    con.add_argument("--range-x", type=_parse_range, required=True)
    con.add_argument("--family-y", required=True)
    con.add_argument("--range-y", type=_parse_range, required=True)
    con.add_argument("--method", required=True, choices=methods)
    con.add_argument("--alpha", type=float, required=True)
    con.add_argument("--steps", type=int, default=40)
    con.set_defaults(func=_cmd_contour, out=None)

    chk = sub.add_parser("check-assumptions",
                         help="identifiability check for a source model")
    chk.add_argument("--sources", required=True)
    chk.add_argument("--method", required=True, choices=methods)
    chk.add_argument("--alpha", type=float, required=True)
    chk.set_defaults(func=_cmd_check_assumptions, out=None)

    return parser


def run(argv=None):
    """Parse argv, execute one subcommand, and return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        text = args.func(args)
        _write_output(text, args.out)
    except UsageError as exc:
        sys.stderr.write(_GRAMMAR)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(_GRAMMAR)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except CumicaError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 2
    return 0


def main(argv=None):
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
