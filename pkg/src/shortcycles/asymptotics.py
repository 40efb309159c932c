"""Asymptotic formulas for kappa(n, r) and empirical checks of their error terms.

Formula identifiers and their (main term, error term):

    P1  exp(-H_r + gamma) omega(u)    1/r^2                   1 <= r < n
    P2  exp(-H_r)                     (u/e)^-u / r^2          r <= n / log n
    T1  exp(-H_r + gamma) omega(u)    rho(u) / r^2            r >= sqrt(n log n)
    T2  exp(-H_r)                     rho(u) / r              r >= (log n)^4
    T3  exp(-H_r)                     nu(n, r) / r            r >= 5

with u = n/r.  Error terms are evaluated with implied constant 1; P2 also
reports the u^-u / r^2 variant allowed for r >= 3.  All arithmetic runs in
mpmath at a precision chosen from the size of the error term, since the
differences being measured can sit hundreds of digits below 1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath

from . import exact, special
from .errors import DomainError

FORMULAS = ("P1", "P2", "T1", "T2", "T3")
CSV_HEADER = ["formula", "n", "r", "u", "exact", "approx", "abs_error", "bound", "ratio"]

_GUARD_DIGITS = 25
_MIN_DPS = 30


def sqrt_nlogn_boundary(n):
    """Smallest r with r >= sqrt(n log n)."""
    return math.ceil(math.sqrt(n * math.log(n)))


def log4_boundary(n):
    """Smallest r with r >= (log n)^4."""
    return math.ceil(math.log(n) ** 4)


def n_over_logn_boundary(n):
    """Largest r with r <= n / log n."""
    return math.floor(n / math.log(n))


def domain_ok(formula_id, n, r):
    """Whether (n, r) satisfies the hypothesis of ``formula_id``."""
    if not 1 <= r < n:
        return False
    if formula_id == "P1":
        return True
    if formula_id == "P2":
        return r <= n_over_logn_boundary(n)
    if formula_id == "T1":
        return r >= sqrt_nlogn_boundary(n)
    if formula_id == "T2":
        return r >= log4_boundary(n)
    if formula_id == "T3":
        return r >= 5
    raise DomainError(f"unknown formula {formula_id!r}")


@dataclass(frozen=True)
class ApproxResult:
    formula_id: str
    n: int
    r: int
    u: float
    approx_value: mpmath.mpf
    bound_value: mpmath.mpf
    domain_ok: bool
    bound_variant: mpmath.mpf | None = None  # P2 with e replaced by 1 (r >= 3)
    dps: int = _MIN_DPS


def _log10_bound(formula_id, n, r, exact_ceiling=exact.DEFAULT_EXACT_CEILING):
    u = n / r
    if formula_id == "P1":
        lb = -2 * math.log(r)
    elif formula_id == "P2":
        lb = -u * math.log(u / math.e) - 2 * math.log(r)
        if r >= 3:
            lb = min(lb, -u * math.log(u) - 2 * math.log(r))
    elif formula_id == "T1":
        lb = special.log_rho(u) - 2 * math.log(r)
    elif formula_id == "T2":
        lb = special.log_rho(u) - math.log(r)
    else:
        return _log10_density(exact.MAX_CYCLE, n, r, exact_ceiling) - math.log10(r)
    return lb / math.log(10)


def working_dps(formula_id, n, r, exact_ceiling=exact.DEFAULT_EXACT_CEILING):
    """Decimal digits needed to resolve the error term of ``formula_id`` at (n, r)."""
    return max(_MIN_DPS, int(-_log10_bound(formula_id, n, r, exact_ceiling)) + _GUARD_DIGITS)


def _table(kind, n, r, dps, exact_ceiling):
    backend = exact.resolve_backend("auto", n, exact_ceiling)
    digits = exact.DEFAULT_DIGITS
    if backend == exact.FLOAT:
        digits = max(exact.DEFAULT_DIGITS, 10 * ((dps + 9) // 10))
    return exact.density_table(kind, r, n, backend, digits, exact_ceiling)


def _log10_density(kind, n, r, exact_ceiling):
    table = _table(kind, n, r, exact.DEFAULT_DIGITS, exact_ceiling)
    if table.backend == exact.EXACT:
        return math.log10(table.counts[n]) - math.log10(exact.factorial(n))
    return float(mpmath.log10(table.floats[n]))


def _density(kind, n, r, dps, exact_ceiling):
    return _table(kind, n, r, dps, exact_ceiling).as_mpf(n)


def approximate(n, r, formula_id, dps=None, exact_ceiling=exact.DEFAULT_EXACT_CEILING):
    """Main term and error-term value of ``formula_id`` at (n, r)."""
    if formula_id not in FORMULAS:
        raise DomainError(f"unknown formula {formula_id!r}")
    if not (isinstance(n, int) and isinstance(r, int)) or not 1 <= r < n:
        raise DomainError(f"need integers 1 <= r < n (got n={n}, r={r})")
    if dps is None:
        dps = working_dps(formula_id, n, r, exact_ceiling)
    ok = domain_ok(formula_id, n, r)
    with mpmath.workdps(dps):
        h = exact.harmonic(r)
        h = mpmath.mpf(h.numerator) / h.denominator
        u = mpmath.mpf(n) / r
        r2 = mpmath.mpf(r) ** 2
        variant = None
        if formula_id in ("P1", "T1"):
            approx = mpmath.exp(-h + special.euler_gamma(min(dps, 60))) * special.omega_hp(u, dps)
        else:
            approx = mpmath.exp(-h)
        if formula_id == "P1":
            bound = 1 / r2
        elif formula_id == "P2":
            bound = (u / mpmath.e) ** (-u) / r2
            if r >= 3:
                variant = u ** (-u) / r2
        elif formula_id == "T1":
            bound = mpmath.exp(special.log_rho(float(u))) / r2
        elif formula_id == "T2":
            bound = mpmath.exp(special.log_rho(float(u))) / r
        else:
            bound = _density(exact.MAX_CYCLE, n, r, dps, exact_ceiling) / r
    return ApproxResult(formula_id, n, r, n / r, approx, bound, ok, variant, dps)


@dataclass(frozen=True)
class ScanRow:
    formula_id: str
    n: int
    r: int
    u: float
    exact: mpmath.mpf
    approx: mpmath.mpf
    abs_error: mpmath.mpf
    bound: mpmath.mpf
    ratio: float
    bound_variant: mpmath.mpf | None = None
    ratio_variant: float | None = None


@dataclass
class ScanReport:
    formula_id: str
    grid: list
    rows: list = field(default_factory=list)

    @property
    def max_ratio(self):
        return max((row.ratio for row in self.rows), default=0.0)

    def ratio_trend(self):
        """Least-squares slope of log(ratio) against log(r); None with < 2 distinct r."""
        pts = [(math.log(row.r), math.log(row.ratio)) for row in self.rows if row.ratio > 0]
        if len({x for x, _ in pts}) < 2:
            return None
        mx = sum(x for x, _ in pts) / len(pts)
        my = sum(y for _, y in pts) / len(pts)
        sxx = sum((x - mx) ** 2 for x, _ in pts)
        return sum((x - mx) * (y - my) for x, y in pts) / sxx

    def summary(self):
        return {"formula": self.formula_id, "points": len(self.rows),
                "max_ratio": self.max_ratio, "ratio_trend": self.ratio_trend()}

    def to_csv(self, handle=None):
        """Write the rows as CSV; returns the text when ``handle`` is None."""
        out = handle if handle is not None else io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([row.formula_id, row.n, row.r, _num(row.u), _num(row.exact),
                             _num(row.approx), _num(row.abs_error), _num(row.bound), _num(row.ratio)])
        if handle is None:
            return out.getvalue()
        return None


def _num(x):
    return mpmath.nstr(mpmath.mpf(x), 17, min_fixed=-4, max_fixed=17)


def measure(n, r, formula_id, exact_ceiling=exact.DEFAULT_EXACT_CEILING):
    """Compare ``formula_id`` against the exact kappa(n, r)."""
    res = approximate(n, r, formula_id, exact_ceiling=exact_ceiling)
    with mpmath.workdps(res.dps):
        kap = _density(exact.MIN_CYCLE, n, r, res.dps, exact_ceiling)
        err = abs(kap - res.approx_value)
        ratio = float(err / res.bound_value)
        ratio_variant = None
        if res.bound_variant is not None:
            ratio_variant = float(err / res.bound_variant)
    return ScanRow(formula_id, n, r, res.u, kap, res.approx_value, err, res.bound_value, ratio,
                   res.bound_variant, ratio_variant)


class GridPointError(DomainError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


def _measure_args(args):
    return measure(*args)


def error_ratio_scan(grid, formula_id, workers=None, exact_ceiling=exact.DEFAULT_EXACT_CEILING):
    """Measure |kappa - approx| / bound at every (n, r) of ``grid``.

    Every point must satisfy the formula's hypothesis; the first violation
    raises GridPointError carrying its index.  Rows keep grid order.  With
    ``workers`` > 1 points are measured in separate processes (mpmath
    precision is process-global, so threads are not used).
    """
    grid = [(int(n), int(r)) for n, r in grid]
    for i, (n, r) in enumerate(grid):
        if not domain_ok(formula_id, n, r):
            raise GridPointError(f"grid point {i} (n={n}, r={r}) violates the {formula_id} hypothesis", i)
    report = ScanReport(formula_id, grid)
    args = [(n, r, formula_id, exact_ceiling) for n, r in grid]
    if workers and workers > 1 and len(grid) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.rows = list(pool.map(_measure_args, args, chunksize=4))
    else:
        report.rows = [measure(*a) for a in args]
    return report


def calibrate(report, safety=2.0):
    """Implied constant for a formula: ``safety`` times the largest ratio seen."""
    return safety * report.max_ratio
