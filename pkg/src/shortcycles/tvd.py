"""Total variation distance between small-cycle counts and independent Poissons.

For a uniform permutation of n elements let (k_1, ..., k_r) count its cycles
of each length j <= r, and let Z_1, ..., Z_r be independent Poisson variables
with means 1/j.  Grouping outcomes by m = sum_j j k_j gives

    d_TV(n, r) = 1/2 sum_{m>=0} nu(m, r) |kappa(n - m, r) - exp(-H_r)|

with kappa(j, r) = 0 for j < 0.  Splitting the sum at m = n - r gives the
three-term regrouping

    (exp(-H_r)/2) sum_{m>=n-r} nu(m, r)  +  nu(n, r)/2  +  remainder,

where the remainder collects m < n - r.  The regrouping double-counts the
m = n term by exp(-H_r) nu(n, r); ``term_correction`` carries that piece so
the identity can be checked exactly.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import mpmath

from . import exact
from .errors import DomainError, ResourceLimitError

CSV_HEADER = ["n", "r", "direct", "term_head", "term_middle", "term_remainder", "tail_bound", "M"]

DEFAULT_TOL = 1e-12
TAIL_STRETCH = 10
TAIL_Q_MAX = 0.99
TAIL_MAX_TERMS = 10 ** 6
_DPS = exact.DEFAULT_DIGITS


class TailSum(NamedTuple):
    partial: mpmath.mpf
    tail_bound: mpmath.mpf
    M: int


class _NuSeries:
    """nu(m, r) for growing m as mpmath numbers, exact up to the ceiling then float."""

    def __init__(self, r, exact_ceiling, digits):
        self.r = r
        self.exact_ceiling = exact_ceiling
        self.digits = digits
        self.values = []
        self.used_float = False

    def __getitem__(self, m):
        while m >= len(self.values):
            self._grow(max(2 * len(self.values), m + 1, 64))
        return self.values[m]

    def _grow(self, upto):
        start = len(self.values)
        with mpmath.workdps(self.digits):
            if start <= self.exact_ceiling:
                top = min(upto, self.exact_ceiling + 1)
                table = exact.density_table(exact.MAX_CYCLE, self.r, top - 1, exact.EXACT,
                                            exact_ceiling=self.exact_ceiling)
                self.values.extend(table.as_mpf(m) for m in range(start, top))
                start = top
            if start < upto:
                self.used_float = True
                table = exact.density_table(exact.MAX_CYCLE, self.r, upto - 1, exact.FLOAT,
                                            digits=self.digits, exact_ceiling=self.exact_ceiling)
                self.values.extend(+table.floats[m] for m in range(start, upto))


_SERIES: dict = {}
_SERIES_LOCK = threading.Lock()


def _nu_series(r, exact_ceiling=exact.DEFAULT_EXACT_CEILING, digits=_DPS):
    key = (r, exact_ceiling, digits)
    with _SERIES_LOCK:
        series = _SERIES.get(key)
        if series is None:
            series = _SERIES[key] = _NuSeries(r, exact_ceiling, digits)
    return series


def nu_tail(r, m_start, tol, q_max=TAIL_Q_MAX, stretch=TAIL_STRETCH, max_terms=TAIL_MAX_TERMS,
            exact_ceiling=exact.DEFAULT_EXACT_CEILING, digits=_DPS, min_M=0):
    """Sum nu(m, r) for m = m_start..M with a certified bound on the rest.

    The sum stops at the first M where the successive ratios
    nu(m+1)/nu(m) have been non-increasing and at most ``q_max`` for
    ``stretch`` consecutive terms and nu(M) q/(1-q) < tol, with q the latest
    ratio (the geometric bound on sum_{m>M} nu(m)).  When float-backend
    terms were used, their relative error budget is added to the bound.
    The sum never stops before ``min_M``.
    """
    if r < 1:
        raise DomainError("nu_tail needs r >= 1")
    if m_start < 0:
        raise DomainError("m_start must be non-negative")
    if not tol > 0:
        raise DomainError("tol must be positive")
    series = _nu_series(r, exact_ceiling, digits)
    with mpmath.workdps(digits):
        partial = mpmath.mpf(0)
        streak, prev_ratio = 0, None
        for m in range(m_start, m_start + max_terms):
            cur, nxt = series[m], series[m + 1]
            partial += cur
            ratio = nxt / cur
            if ratio <= q_max and (prev_ratio is None or ratio <= prev_ratio):
                streak += 1
            else:
                streak = 0
            prev_ratio = ratio
            if streak >= stretch:
                bound = cur * ratio / (1 - ratio)
                if series.used_float:
                    bound += partial * mpmath.mpf(10) ** (5 - digits)
                if bound < tol and m >= min_M:
                    return TailSum(+partial, bound, m)
    raise ResourceLimitError(f"nu tail for r={r} not certified within {max_terms} terms")


@dataclass(frozen=True)
class TVDecomposition:
    n: int
    r: int
    direct_value: float
    term_head: float
    term_middle: float
    term_remainder: float
    term_correction: float
    truncation_M: int
    tail_bound: float
    remainder_scale: float  # (1/r) sum_{m<n-r} nu(m, r) nu(n-m, r)

    @property
    def term_remainder_exact(self):
        """Remainder with the m = n cross term restored."""
        return self.term_remainder + self.term_correction

    @property
    def identity_gap(self):
        return abs(self.direct_value - (self.term_head + self.term_middle + self.term_remainder_exact))

    def csv_row(self):
        return [self.n, self.r, _num(self.direct_value), _num(self.term_head), _num(self.term_middle),
                _num(self.term_remainder), _num(self.tail_bound), self.truncation_M]


def _num(x):
    return repr(float(x))


def tv_exact(n, r, tol=DEFAULT_TOL, permissive=False, exact_ceiling=exact.DEFAULT_EXACT_CEILING,
             min_M=0):
    """d_TV(n, r) by the convolution sum, with its three-term regrouping.

    ``permissive`` widens the accepted range from 5 <= r < n to 1 <= r < n.
    ``min_M`` forces the m-sum to run at least that far.
    """
    if not (isinstance(n, int) and isinstance(r, int)):
        raise DomainError("n and r must be integers")
    lo = 1 if permissive else 5
    if not lo <= r < n:
        raise DomainError(f"tv_exact needs {lo} <= r < n (got n={n}, r={r})")
    if not tol > 0:
        raise DomainError("tol must be positive")
    nu = _nu_series(r, exact_ceiling)
    kap = exact.density_table(exact.MIN_CYCLE, r, n, "auto", exact_ceiling=exact_ceiling)
    with mpmath.workdps(_DPS):
        h = exact.harmonic(r)
        e_h = mpmath.exp(-mpmath.mpf(h.numerator) / h.denominator)
        tail = nu_tail(r, n + 1, tol, exact_ceiling=exact_ceiling, min_M=min_M)

        remainder = mpmath.mpf(0)
        scale = mpmath.mpf(0)
        for m in range(0, n - r):
            remainder += nu[m] * abs(kap.as_mpf(n - m) - e_h)
            scale += nu[m] * nu[n - m]
        near = mpmath.fsum(nu[m] for m in range(max(n - r, 0), n + 1))
        # m in [n-r, n-1]: kappa(n-m) = 0;  m = n: kappa(0) = 1;  m > n: kappa = 0
        direct = remainder + e_h * (near - nu[n]) + nu[n] * abs(1 - e_h) + e_h * tail.partial
        direct /= 2
        head = e_h * (near + tail.partial) / 2
        middle = nu[n] / 2
        remainder /= 2
        correction = -e_h * nu[n]
    dec = TVDecomposition(n, r, float(direct), float(head), float(middle), float(remainder),
                          float(correction), tail.M, float(tail.tail_bound), float(scale / r))
    if not 0 <= dec.direct_value <= 1:
        raise ArithmeticError(f"d_TV({n}, {r}) = {dec.direct_value} outside [0, 1]")
    if dec.identity_gap > 2 * max(dec.tail_bound, 1e-15):
        raise ArithmeticError(f"regrouping identity off by {dec.identity_gap:g} at n={n}, r={r}")
    return dec


def tv_brute_force(n, r):
    """d_TV(n, r) from the two joint laws of (k_1, ..., k_r), built from scratch.

    The permutation law comes from enumerating cycle types of S_n; the
    Poisson law is the product of Poisson(1/j) masses.  Vectors with
    sum_j j k_j > n carry no permutation mass, so they contribute half of
    P(sum_j j Z_j > n).  Limited to n <= 12.
    """
    if n > exact.BRUTE_FORCE_MAX_N:
        raise ResourceLimitError(f"brute-force d_TV is limited to n <= {exact.BRUTE_FORCE_MAX_N}")
    if not 1 <= r < n:
        raise DomainError(f"need 1 <= r < n (got n={n}, r={r})")
    law = {}
    nfact = math.factorial(n)
    for parts in exact.partitions(n):
        key = tuple(parts.get(j, 0) for j in range(1, r + 1))
        law[key] = law.get(key, 0) + exact.cycle_type_count(n, parts)
    with mpmath.workdps(40):
        total = mpmath.mpf(0)
        covered = mpmath.mpf(0)
        for m in range(n + 1):
            for parts in exact.partitions(m, r):
                key = tuple(parts.get(j, 0) for j in range(1, r + 1))
                pz = mpmath.mpf(1)
                for j in range(1, r + 1):
                    lam = mpmath.mpf(1) / j
                    pz *= mpmath.exp(-lam) * lam ** key[j - 1] / math.factorial(key[j - 1])
                covered += pz
                total += abs(mpmath.mpf(law.get(key, 0)) / nfact - pz)
        return float((total + (1 - covered)) / 2)


def to_csv(decompositions, handle=None):
    out = handle if handle is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for dec in decompositions:
        writer.writerow(dec.csv_row())
    return out.getvalue() if handle is None else None
