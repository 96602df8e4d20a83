"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 input or schema error, 3 an
identification condition was not met, 4 numerical degeneracy.
Every run writes a JSON-lines manifest (stderr by default, or --manifest).
"""

import argparse
import contextlib
import csv
import json
import logging
import sys
from dataclasses import replace

from . import __version__
from .baselines import (
    BootstrapConfig,
    cross_moment_wz,
    did_closed_form,
    ols_naive,
    twfe_design,
    twfe_regression,
    two_proxy,
)
from .dataset import ColumnMapping, load_card_krueger, table1
from .errors import ConditionError, CrossMomentError, DegeneracyError, InputError, SchemaError
from .estimator import DEFAULT_N_MAX, DEFAULT_TOL, DEFAULT_Z_CRIT, get_beta
from .experiments import DEFAULT_SIZES, METHODS, BenchGrid, run_bench, run_ratio_sweep
from .kernels import BACKEND
from .scm import FAMILIES, RNG_ALGORITHM, Dataset, NoiseSpec, ScmParams, sample_params, simulate
from .twin import GaussianScm, construct_twin, verify_twin

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CONDITION, EXIT_DEGENERATE = 0, 1, 2, 3, 4

log = logging.getLogger("crossmoment")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _methods(text):
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return out


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative threshold for nonzero moments")
    p.add_argument("--n-max", type=int, default=DEFAULT_N_MAX, help="highest moment order tried")
    p.add_argument("--z-crit", type=float, default=DEFAULT_Z_CRIT, help="sampling-noise gate in standard errors")
    p.add_argument("--resamples", type=int, default=50, help="bootstrap resamples for cross_moment_wz")
    p.add_argument("--resample-fraction", type=float, default=1.0, help="resample size as a fraction of N")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--output", "-o", default="-", help="output file (default stdout)")
    p.add_argument("--manifest", default=None, help="append the run manifest to this file (default stderr)")
    p.add_argument("--format", choices=("text", "csv"), default=None, help="report format")
    p.add_argument("-v", "--verbose", action="store_true", help="log estimator failures")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="crossmoment", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="draw a synthetic dataset as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--family", choices=FAMILIES, default="exponential", help="distribution of e_u")
    p.add_argument("--noise-family", choices=FAMILIES, default=None,
                   help="distribution of the other noises (default: same as --family)")
    p.add_argument("--random-params", action="store_true", help="draw parameters at random from --seed")
    p.add_argument("--with-w", action="store_true", help="also generate the second proxy W")
    p.add_argument("--alpha-z", type=float)
    p.add_argument("--alpha-d", type=float)
    p.add_argument("--alpha-w", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--vars", type=_float_list, default=None,
                   help="noise variances u,z,d,y[,w] (default all 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="estimate beta from a CSV dataset")
    p.add_argument("--input", "-i", default="-", help="CSV with columns z,d,y[,w] (default stdin)")
    p.add_argument("--method", choices=METHODS, default="cross_moment")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", parents=[common], help="relative error versus sample size")
    p.add_argument("--methods", type=_methods, default=["cross_moment", "did", "ols"])
    p.add_argument("--sizes", type=_int_list, default=list(DEFAULT_SIZES))
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--family", choices=FAMILIES, default="exponential")
    p.add_argument("--noise-ratio", type=float, default=0.1, help="Var(e_z)/Var(e_u), also used for e_d, e_y")
    p.add_argument("--w-ratio", type=float, default=10.0, help="Var(e_w)/Var(e_u)")
    p.add_argument("--unpaired", action="store_true", help="fresh parameters in every cell")
    p.add_argument("--raw", action="store_true", help="emit one row per method and replication")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ratio-sweep", parents=[common], help="relative error versus Var(e_w)/Var(e_u)")
    p.add_argument("--methods", type=_methods,
                   default=["cross_moment", "cross_moment_w", "cross_moment_wz", "two_proxy"])
    p.add_argument("--ratios", type=_float_list, default=[0.1, 1.0, 10.0, 100.0])
    p.add_argument("--n", type=int, default=100_000, help="fixed sample size")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--family", choices=FAMILIES, default="exponential")
    p.add_argument("--noise-ratio", type=float, default=0.1)
    p.add_argument("--unpaired", action="store_true")
    p.add_argument("--raw", action="store_true")
    p.set_defaults(func=cmd_ratio_sweep)

    p = sub.add_parser("counterexample", parents=[common], help="Gaussian SCM twin with a different beta")
    p.add_argument("--alpha-z", type=float, default=1.0)
    p.add_argument("--alpha-d", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--vars", type=_float_list, default=[1.0, 1.0, 1.0, 1.0], help="variances u,z,d,y")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--check-tol", type=float, default=1e-9, help="tolerance of the covariance check")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("table1", parents=[common], help="TWFE and cross-moment on the Card-Krueger data")
    p.add_argument("--data", required=True, help="path to the survey file (public.dat)")
    p.add_argument("--mapping", default=None, help="INI column mapping (default: shipped reference)")
    p.add_argument("--outcome", choices=("half_ft", "fte"), default=None, help="override the employment rule")
    p.set_defaults(func=cmd_table1)
    return parser


# --- I/O helpers -----------------------------------------------------------------

@contextlib.contextmanager
def _out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _manifest(args, argv):
    flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "subcommand": args.command,
        "argv": list(argv),
        "flags": flags,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
        "version": __version__,
        "backend": BACKEND,
    }


def _emit_manifest(record, path):
    line = json.dumps(record, sort_keys=True, default=str)
    if path:
        with open(path, "a") as fh:
            fh.write(line + "\n")
    else:
        print(line, file=sys.stderr)


# --- subcommands -------------------------------------------------------------------

def _explicit_params(args):
    missing = [f"--{n.replace('_', '-')}" for n in ("alpha_z", "alpha_d", "beta", "gamma") if getattr(args, n) is None]
    if missing:
        raise UsageError(f"simulate needs --random-params or all of {', '.join(missing)}")
    want = 5 if args.with_w else 4
    variances = args.vars or [1.0] * want
    if len(variances) != want:
        raise UsageError(f"--vars needs {want} comma-separated variances")
    fam_u = args.family
    fam = args.noise_family or args.family
    alpha_w = None
    if args.with_w:
        alpha_w = args.alpha_w if args.alpha_w is not None else args.alpha_z
    return ScmParams(
        alpha_z=args.alpha_z,
        alpha_d=args.alpha_d,
        beta=args.beta,
        gamma=args.gamma,
        noise_u=NoiseSpec(fam_u, variances[0]),
        noise_z=NoiseSpec(fam, variances[1]),
        noise_d=NoiseSpec(fam, variances[2]),
        noise_y=NoiseSpec(fam, variances[3]),
        alpha_w=alpha_w,
        noise_w=NoiseSpec(fam, variances[4]) if args.with_w else None,
    )


def cmd_simulate(args):
    if args.n < 1:
        raise UsageError("--n must be positive")
    if args.random_params:
        params = sample_params(args.seed, with_w=args.with_w, family=args.family)
    else:
        params = _explicit_params(args)
    data = simulate(params, args.n, args.seed)
    with _out(args.output) as fh:
        data.to_csv(fh)
    return {"params": _params_dict(params)}


def _params_dict(p):
    out = {k: getattr(p, k) for k in ("alpha_z", "alpha_d", "beta", "gamma", "alpha_w")}
    for key, spec in p.noises().items():
        out[f"noise_{key}"] = [spec.family, spec.variance]
    return out


def _read_dataset(path):
    if path in (None, "-"):
        return Dataset.from_csv(sys.stdin)
    with open(path, newline="") as fh:
        return Dataset.from_csv(fh)


def cmd_estimate(args):
    data = _read_dataset(args.input)
    opts = dict(tol=args.tol, n_max=args.n_max, z_crit=args.z_crit)
    m = args.method
    if m in ("cross_moment_w", "cross_moment_wz", "two_proxy") and data.w is None:
        raise SchemaError(f"method {m} needs a 'w' column")
    if m == "cross_moment":
        report = get_beta(data.d, data.z, data.y, **opts)
    elif m == "cross_moment_w":
        report = get_beta(data.d, data.w, data.y, **opts)
    elif m == "cross_moment_wz":
        cfg = BootstrapConfig(args.resamples, args.resample_fraction, args.seed)
        report = cross_moment_wz(data.d, data.z, data.w, data.y, cfg, threads=args.threads, **opts)
    elif m == "two_proxy":
        report = two_proxy(data.d, data.z, data.w, data.y, tol=args.tol)
    elif m == "did":
        report = did_closed_form(data.d, data.z, data.y)
    elif m == "twfe":
        report = twfe_regression(twfe_design(data.z, data.d, data.y))
    else:
        report = ols_naive(data.d, data.z, data.y)
    record = {"n": len(data), **report.as_dict()}
    with _out(args.output) as fh:
        if args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in record.items():
                w.writerow([k, repr(v) if isinstance(v, float) else v])
        else:
            fh.write(f"beta_hat = {report.beta_hat!r}\nmethod = {report.method}\n")
            for k, v in record.items():
                if k not in ("beta_hat", "method"):
                    fh.write(f"  {k}: {v}\n")
    return {"beta_hat": report.beta_hat}


def _grid(args, **extra):
    return BenchGrid(
        replications=args.reps,
        noise_family=args.family,
        methods=tuple(args.methods),
        seed=args.seed,
        noise_ratio=args.noise_ratio,
        resamples=args.resamples,
        resample_fraction=args.resample_fraction,
        tol=args.tol,
        n_max=args.n_max,
        z_crit=args.z_crit,
        paired=not args.unpaired,
        **extra,
    )


def cmd_bench(args):
    grid = _grid(args, sample_sizes=tuple(args.sizes), w_ratio=args.w_ratio)
    result = run_bench(grid, threads=args.threads)
    with _out(args.output) as fh:
        result.to_csv(fh, raw=args.raw)
    return {"rows": len(result.raw if args.raw else result.rows)}


def cmd_ratio_sweep(args):
    grid = _grid(args, variance_ratio_grid=tuple(args.ratios), sweep_size=args.n)
    result = run_ratio_sweep(grid, threads=args.threads)
    with _out(args.output) as fh:
        result.to_csv(fh, raw=args.raw)
    return {"rows": len(result.raw if args.raw else result.rows)}


_SCM_FIELDS = ("alpha_z", "alpha_d", "beta", "gamma", "var_u", "var_z", "var_d", "var_y")


def cmd_counterexample(args):
    if len(args.vars) != 4:
        raise UsageError("--vars needs 4 comma-separated variances u,z,d,y")
    m1 = GaussianScm(args.alpha_z, args.alpha_d, args.beta, args.gamma, *args.vars)
    twin = construct_twin(m1, args.delta)
    ok, report = verify_twin(twin, args.check_tol)
    with _out(args.output) as fh:
        if args.format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "m1", "m2", "abs_diff", "status"])
            for name in _SCM_FIELDS:
                a, b = getattr(twin.m1, name), getattr(twin.m2, name)
                w.writerow([name, repr(float(a)), repr(float(b)), repr(abs(float(a) - float(b))), ""])
            for label, a, b, diff, passed in report:
                w.writerow([label, repr(a), repr(b), repr(diff), "PASS" if passed else "FAIL"])
        else:
            fh.write(f"delta = {twin.delta:.6g}, k = {twin.k:.6g}\n")
            fh.write(f"{'parameter':<10}{'M1':>14}{'M2':>14}\n")
            for name in _SCM_FIELDS:
                fh.write(f"{name:<10}{getattr(twin.m1, name):>14.6g}{getattr(twin.m2, name):>14.6g}\n")
            fh.write("observational covariance:\n")
            for label, a, b, diff, passed in report[:-1]:
                fh.write(f"  {'PASS' if passed else 'FAIL'}  {label:<9} M1={a:.10g}  M2={b:.10g}  |diff|={diff:.2e}\n")
            label, a, b, diff, passed = report[-1]
            fh.write(f"  {'PASS' if passed else 'FAIL'}  beta differs: beta={a:.6g}, beta'={b:.6g}\n")
            fh.write(f"twin verified: {'yes' if ok else 'no'}\n")
    return {"verified": ok, "beta_prime": twin.m2.beta}


def cmd_table1(args):
    mapping = ColumnMapping.from_ini(args.mapping) if args.mapping else ColumnMapping.reference()
    if args.outcome:
        mapping = replace(mapping, outcome=args.outcome)
    data = load_card_krueger(args.data, mapping)
    table = table1(data, tol=args.tol, n_max=args.n_max, z_crit=args.z_crit)
    with _out(args.output) as fh:
        fh.write(table.to_csv_string() if args.format == "csv" else table.to_text())
    return {"cells": {f"{k[0]}/{k[1]}": v for k, v in table.cells.items()}}


# --- entry point --------------------------------------------------------------------

def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    record = _manifest(args, argv)
    code = EXIT_OK
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        record["result"] = args.func(args)
    except UsageError as exc:
        print(f"crossmoment {args.command}: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except InputError as exc:
        print(f"crossmoment {args.command}: input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except OSError as exc:
        print(f"crossmoment {args.command}: input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except ConditionError as exc:
        print(f"crossmoment {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_CONDITION
    except DegeneracyError as exc:
        print(f"crossmoment {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_DEGENERATE
    except CrossMomentError as exc:  # pragma: no cover - every subclass is handled above
        print(f"crossmoment {args.command}: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    record["exit_code"] = code
    _emit_manifest(record, args.manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
