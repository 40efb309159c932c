"""Command-line front end: ``shortcycles <subcommand> [options]``.

Every run echoes its resolved configuration: as ``# key=value`` comment
lines before CSV, as a ``config`` object in JSON, and on stderr for plain
output.  Exit codes: 0 success, 1 numeric or resource failure, 2 usage
error (including arguments outside a function's domain).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

from . import __version__, asymptotics, exact, montecarlo, saddle, special, tvd, verify
from .errors import DomainError, ShortCyclesError

PRECISION_ENV = "SHORTCYCLES_PRECISION"
DEFAULT_PRECISION = 17

R_RULES = ("sqrt-nlogn", "log4", "n-over-logn", "const:K", "u:X")


class UsageError(Exception):
    pass


def _default_precision():
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{PRECISION_ENV} must be an integer (got {raw!r})") from None
    if value < 1:
        raise UsageError(f"{PRECISION_ENV} must be positive")
    return value


def fmt(x, precision):
    """Exact rationals as p/q, floats as the shortest decimal at ``precision`` digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, precision, min_fixed=-4, max_fixed=precision)
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    if precision >= 17:
        return repr(x)
    return f"{x:.{precision}g}"


# ---------------------------------------------------------------- parsing

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def parse_n_range(text):
    """``a:b:step`` as the inclusive list a, a+step, ..., <= b."""
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, expected a:b:step") from None
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] < 1 or parts[0] < 1 or parts[1] < parts[0]:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, expected a:b:step with 1 <= a <= b, step >= 1")
    a, b, step = parts
    return list(range(a, b + 1, step))


def parse_r_rule(text):
    """Map an r-rule name to a function n -> r."""
    if text == "sqrt-nlogn":
        return asymptotics.sqrt_nlogn_boundary
    if text == "log4":
        return asymptotics.log4_boundary
    if text == "n-over-logn":
        return asymptotics.n_over_logn_boundary
    head, _, arg = text.partition(":")
    try:
        if head == "const" and arg:
            k = int(arg)
            return lambda n: k
        if head == "u" and arg:
            u = float(arg)
            if u > 0:
                return lambda n: max(1, round(n / u))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"unknown r-rule {text!r}; expected one of {', '.join(R_RULES)}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("csv", "json", "plain"), default="plain")
    common.add_argument("--precision", type=_positive_int, default=None,
                        help=f"significant digits for floats (default ${PRECISION_ENV} or {DEFAULT_PRECISION})")
    common.add_argument("--exact-ceiling", type=_nonneg_int, default=exact.DEFAULT_EXACT_CEILING)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--table-cache", type=Path, default=None,
                        help="directory for persisted density tables and delay-equation solutions")

    parser = argparse.ArgumentParser(prog="shortcycles",
                                     description="Permutations with restricted cycle lengths.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, desc in (("kappa", "density of permutations with all cycles longer than r"),
                       ("nu", "density of permutations with all cycles at most r")):
        p = sub.add_parser(name, parents=[common], help=desc)
        p.add_argument("--n", type=_nonneg_int, required=True)
        p.add_argument("--r", type=_nonneg_int, required=True)
        p.add_argument("--backend", choices=("exact", "float", "auto"), default="auto")

    p = sub.add_parser("omega", parents=[common], help="Buchstab's function")
    p.add_argument("--v", type=float, nargs="+", required=True)
    p = sub.add_parser("rho", parents=[common], help="Dickman's function")
    p.add_argument("--v", type=float, nargs="+", required=True)

    p = sub.add_parser("approx", parents=[common], help="asymptotic formula against the exact value")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--formula", choices=asymptotics.FORMULAS, required=True)

    p = sub.add_parser("saddle", parents=[common], help="kappa by the saddle-point contour integral")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--points", type=_positive_int, default=None)
    p.add_argument("--mp", action="store_true", help="multiprecision quadrature at --precision digits")

    p = sub.add_parser("tvd", parents=[common], help="total variation distance to independent Poissons")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--tol", type=float, default=tvd.DEFAULT_TOL)
    p.add_argument("--permissive", action="store_true", help="allow 1 <= r < 5")

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo estimate of kappa or nu")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=_positive_int, required=True)
    p.add_argument("--mode", choices=(montecarlo.KAPPA, montecarlo.NU), default=montecarlo.KAPPA)
    p.add_argument("--samples", type=_positive_int, default=100000)
    p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("scan", parents=[common], help="error-ratio scan of an asymptotic formula")
    p.add_argument("--formula", choices=asymptotics.FORMULAS, required=True)
    p.add_argument("--n-range", type=parse_n_range, required=True, metavar="A:B:STEP")
    p.add_argument("--r-rule", type=parse_r_rule, required=True, metavar="RULE",
                   help="sqrt-nlogn, log4, n-over-logn, const:K or u:X")
    p.add_argument("--skip-outside", action="store_true",
                   help="drop grid points outside the formula's hypothesis instead of failing")
    p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("verify", parents=[common], help="cross-module identity suite")
    p.add_argument("--level", choices=verify.LEVELS, default="quick")
    return parser


def resolved_config(args, argv):
    config = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "r_rule", "n_range"):
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    if args.command == "scan":
        # keep the textual form of grid specs
        config["n_range"] = _flag_value(argv, "--n-range")
        config["r_rule"] = _flag_value(argv, "--r-rule")
    if args.command == "sample":
        config["algorithm"] = montecarlo.ALGORITHM
    return config


def _flag_value(argv, flag):
    for i, tok in enumerate(argv):
        if tok == flag and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith(flag + "="):
            return tok.split("=", 1)[1]
    return None


# ---------------------------------------------------------------- output

class Result:
    def __init__(self, columns, rows, plain=None, summary=None, ok=True):
        self.columns = columns
        self.rows = rows
        self.plain = plain  # text printed for --output plain instead of the table
        self.summary = summary
        self.ok = ok


def emit(result, config, output, precision, out, err):
    cells = [[fmt(v, precision) for v in row] for row in result.rows]
    if output == "json":
        doc = {"config": config, "columns": result.columns,
               "rows": [dict(zip(result.columns, row)) for row in cells]}
        if result.summary is not None:
            doc["summary"] = result.summary
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    header = "".join(f"# {k}={_cfg_text(v)}\n" for k, v in config.items())
    if output == "csv":
        out.write(header)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(result.columns)
        writer.writerows(cells)
        if result.summary is not None:
            out.write("".join(f"# {k}={_cfg_text(v)}\n" for k, v in result.summary.items()))
        return
    err.write(header)
    if result.plain is not None:
        out.write(result.plain + "\n")
    else:
        out.write("\t".join(result.columns) + "\n")
        for row in cells:
            out.write("\t".join(row) + "\n")
    if result.summary is not None:
        out.write(" ".join(f"{k}={_cfg_text(v)}" for k, v in result.summary.items()) + "\n")


def _cfg_text(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


# ---------------------------------------------------------------- commands

def cmd_density(args, precision):
    kind = exact.MIN_CYCLE if args.command == "kappa" else exact.MAX_CYCLE
    fn = exact.kappa_exact if kind == exact.MIN_CYCLE else exact.nu_exact
    backend = exact.resolve_backend(args.backend, args.n, args.exact_ceiling)
    with mpmath.workdps(max(precision + 5, exact.DEFAULT_DIGITS)):
        value = fn(args.n, args.r, backend=backend, digits=max(precision + 5, exact.DEFAULT_DIGITS),
                   exact_ceiling=args.exact_ceiling)
    text = fmt(value, precision)
    return Result(["n", "r", "backend", "value"], [[args.n, args.r, backend, value]], plain=text)


def _special_value(fn_double, fn_hp, v, precision):
    # the double-precision solver is good to about 1e-14 relative
    if precision <= 14:
        return fn_double(v)
    return fn_hp(v, precision + 5)


def cmd_special(args, precision):
    if args.command == "omega":
        pair = (special.omega, special.omega_hp)
    else:
        pair = (special.rho, special.rho_hp)
    rows = []
    for v in args.v:
        value = _special_value(*pair, v, precision)
        if isinstance(value, mpmath.mpf):
            with mpmath.workdps(precision + 5):
                value = +value
        rows.append([v, value])
    plain = "\n".join(fmt(val, precision) for _, val in rows)
    return Result(["v", "value"], rows, plain=plain)


def cmd_approx(args, precision):
    row = asymptotics.measure(args.n, args.r, args.formula, exact_ceiling=args.exact_ceiling)
    ok = asymptotics.domain_ok(args.formula, args.n, args.r)
    cols = asymptotics.CSV_HEADER + ["domain_ok"]
    return Result(cols, [[row.formula_id, row.n, row.r, row.u, row.exact, row.approx, row.abs_error,
                          row.bound, row.ratio, ok]])


def cmd_saddle(args, precision):
    if args.mp:
        value = saddle.kappa_contour_mp(args.n, args.r, args.points, dps=precision + 5)
        return Result(["n", "r", "value"], [[args.n, args.r, value]], plain=fmt(value, precision))
    res = saddle.kappa_contour(args.n, args.r, args.points)
    cfg = res.config
    cols = ["n", "r", "value", "radius", "num_points", "alias_bound", "imag_residue", "status"]
    row = [args.n, args.r, res.value, cfg.radius, cfg.num_points, res.alias_bound, res.imag_residue,
           res.status]
    return Result(cols, [row], ok=res.status == saddle.STATUS_OK)


def cmd_tvd(args, precision):
    dec = tvd.tv_exact(args.n, args.r, args.tol, permissive=args.permissive,
                       exact_ceiling=args.exact_ceiling)
    row = [dec.n, dec.r, dec.direct_value, dec.term_head, dec.term_middle, dec.term_remainder,
           dec.tail_bound, dec.truncation_M]
    return Result(tvd.CSV_HEADER, [row])


def cmd_sample(args, precision):
    seed = 0 if args.seed is None else args.seed
    est = montecarlo.estimate_density(args.n, args.r, args.mode, args.samples, seed, workers=args.workers)
    row = [est.n, est.r, est.mode, est.samples, est.estimate, est.stderr, est.seed]
    return Result(montecarlo.CSV_HEADER, [row])


def cmd_scan(args, precision):
    grid = [(n, args.r_rule(n)) for n in args.n_range]
    if args.skip_outside:
        grid = [(n, r) for n, r in grid if asymptotics.domain_ok(args.formula, n, r)]
    report = asymptotics.error_ratio_scan(grid, args.formula, workers=args.workers,
                                          exact_ceiling=args.exact_ceiling)
    rows = [[row.formula_id, row.n, row.r, row.u, row.exact, row.approx, row.abs_error, row.bound,
             row.ratio] for row in report.rows]
    summary = report.summary()
    summary = {k: (fmt(v, precision) if isinstance(v, float) else v) for k, v in summary.items()}
    return Result(asymptotics.CSV_HEADER, rows, summary=summary)


def cmd_verify(args, precision):
    checks = verify.run_suite(args.level)
    passed = sum(c.passed for c in checks)
    rows = [[c.name, c.passed, c.cases, c.detail] for c in checks]
    return Result(["check", "passed", "cases", "detail"], rows,
                  summary={"passed": passed, "total": len(checks)}, ok=passed == len(checks))


COMMANDS = {
    "kappa": cmd_density, "nu": cmd_density, "omega": cmd_special, "rho": cmd_special,
    "approx": cmd_approx, "saddle": cmd_saddle, "tvd": cmd_tvd, "sample": cmd_sample,
    "scan": cmd_scan, "verify": cmd_verify,
}


# ---------------------------------------------------------------- table cache

def load_cache(directory, err):
    if directory is None or not directory.is_dir():
        return
    for path in sorted(directory.glob("*.json")):
        try:
            kind = json.loads(path.read_text()).get("format")
            if kind == "density-table":
                exact.load_table(path)
            elif kind == "piecewise-solution":
                special.load_solution(path)
        except (ValueError, KeyError, OSError) as exc:
            err.write(f"warning: ignoring cache file {path.name}: {exc}\n")


def _cache_snapshot():
    # holding the objects keeps their ids from being reused
    return exact.cached_tables() + special.cached_solutions()


def save_cache(directory, before):
    """Persist tables and solutions built or extended since ``before`` was taken."""
    if directory is None:
        return
    before = {id(obj) for obj in before}
    for table in exact.cached_tables():
        if id(table) not in before:
            exact.save_table(table, directory)
    for sol in special.cached_solutions():
        if id(sol) not in before:
            special.save_solution(sol, directory)


# ---------------------------------------------------------------- entry points

def run(argv, out=None, err=None):
    """Run the CLI on ``argv``; returns the exit code."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        precision = args.precision if args.precision is not None else _default_precision()
        args.precision = precision
        config = resolved_config(args, argv)
        load_cache(args.table_cache, err)
        before = _cache_snapshot()
        result = COMMANDS[args.command](args, precision)
        save_cache(args.table_cache, before)
    except UsageError as exc:
        err.write(f"shortcycles: error: {exc}\n")
        return 2
    except DomainError as exc:
        err.write(f"shortcycles: error: {exc}\n")
        return 2
    except (ShortCyclesError, ArithmeticError) as exc:
        err.write(f"shortcycles: {type(exc).__name__}: {exc}\n")
        return 1
    emit(result, config, args.output, precision, out, err)
    return 0 if result.ok else 1


def main(argv=None):
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
