"""Cross-module identity suite behind ``shortcycles verify``.

Every check compares two computations that share as little code as
possible: recurrences against cycle-type enumeration, exact tables against
the Cauchy integral, the convolution sum against its regrouping, and the
delay-equation solvers against closed forms.  Output is deterministic (no
timings, fixed pseudo-random pairs).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from . import exact, saddle, special, tvd

LEVELS = ("quick", "full")

# per-level sizes
_SIZES = {
    "quick": dict(conv_n=60, oracle_n=8, trivial_n=100, contour_pairs=20, contour_n=200,
                  tv_n=20, tv_brute_n=9),
    "full": dict(conv_n=300, oracle_n=10, trivial_n=500, contour_pairs=200, contour_n=500,
                 tv_n=60, tv_brute_n=12),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str


def convolution_identity(n_max):
    """sum_m nu(m, r) kappa(n-m, r) == 1 for all 1 <= r < n <= n_max, in integers.

    With L = n_max!, A_m = (m! nu(m)) L/m! and B_k = (k! kappa(k)) L/k! are
    integers and the identity reads sum_m A_m B_{n-m} == L^2.
    """
    big = gmpy2.mpz(exact.factorial(n_max))
    target = big * big
    scale = [big // exact.factorial(k) for k in range(n_max + 1)]
    failures, cases = [], 0
    for r in range(1, n_max):
        nu = exact.density_table(exact.MAX_CYCLE, r, n_max).counts
        ka = exact.density_table(exact.MIN_CYCLE, r, n_max).counts
        a = [gmpy2.mpz(nu[m]) * scale[m] for m in range(n_max + 1)]
        b = [gmpy2.mpz(ka[k]) * scale[k] for k in range(n_max + 1)]
        for n in range(r + 1, n_max + 1):
            # kappa(k, r) = 0 for 1 <= k <= r
            total = a[n] * b[0]
            for k in range(r + 1, n + 1):
                total += a[n - k] * b[k]
            cases += 1
            if total != target:
                failures.append((n, r))
    return CheckResult("convolution identity", not failures, cases, _failed(failures))


def oracle_equality(n_max):
    """Recurrence tables against cycle-type enumeration, exactly."""
    failures, cases = [], 0
    for n in range(1, n_max + 1):
        for r in range(1, n + 1):
            for kind, fn in ((exact.MIN_CYCLE, exact.kappa_exact), (exact.MAX_CYCLE, exact.nu_exact)):
                cases += 1
                if fn(n, r) != exact.brute_force_density(n, kind, r):
                    failures.append((kind, n, r))
    return CheckResult("oracle equality", not failures, cases, _failed(failures))


def trivial_cases(n_max):
    """kappa(n, r) = 1/n for n/2 <= r < n, and kappa(n, 1) is the derangement series."""
    failures, cases = [], 0
    for n in range(2, n_max + 1):
        for r in range((n + 1) // 2, n):
            cases += 1
            if exact.kappa_exact(n, r) != Fraction(1, n):
                failures.append(("1/n", n, r))
    series = Fraction(0)
    for n in range(0, min(n_max, 100) + 1):
        series += Fraction((-1) ** n, math.factorial(n))
        cases += 1
        if exact.kappa_exact(n, 1) != series:
            failures.append(("derangement", n, 1))
    return CheckResult("trivial cases", not failures, cases, _failed(failures))


def contour_pairs(count, n_max, seed=20240607):
    rng = random.Random(seed)
    pairs = []
    while len(pairs) < count:
        n = rng.randint(2, n_max)
        pairs.append((n, rng.randint(1, n - 1)))
    return pairs


def contour_agreement(count, n_max, rel_tol=1e-9):
    """Saddle-point contour integral against the exact table."""
    worst, failures = 0.0, []
    for n, r in contour_pairs(count, n_max):
        ref = exact.kappa_exact(n, r)
        res = saddle.kappa_contour(n, r)
        err = abs(res.value - float(ref)) / float(ref)
        worst = max(worst, err)
        if err > rel_tol or res.status != saddle.STATUS_OK:
            failures.append((n, r))
    return CheckResult("contour agreement", not failures, count,
                       _failed(failures) or f"worst relative error {worst:.2e}")


def decomposition_identity(n_max, brute_n, tol=1e-12):
    """Convolution TV against its regrouping and, for small n, against brute force."""
    failures, cases = [], 0
    for n in range(6, n_max + 1):
        for r in range(5, n):
            cases += 1
            dec = tvd.tv_exact(n, r, tol)
            if dec.identity_gap > 2 * dec.tail_bound or not 0 <= dec.direct_value <= 1:
                failures.append(("identity", n, r))
            if n <= brute_n and abs(dec.direct_value - tvd.tv_brute_force(n, r)) > tol:
                failures.append(("brute", n, r))
    return CheckResult("decomposition identity", not failures, cases, _failed(failures))


def special_values():
    """Delay-equation solutions against initial conditions and closed forms."""
    checks = [
        ("omega(1.5)", special.omega(1.5), 2 / 3, 0.0),
        ("rho(0.5)", special.rho(0.5), 1.0, 0.0),
        ("omega(2.5)", special.omega(2.5), (1 + math.log(1.5)) / 2.5, 1e-12),
        ("rho(2)", special.rho(2.0), 1 - math.log(2), 1e-12),
    ]
    failures = [name for name, got, want, tol in checks if abs(got - want) > tol]
    for kind in (special.BUCHSTAB, special.DICKMAN):
        sol = special.default_solution(kind)
        rng = random.Random(7)
        worst = max(abs(sol.residual(rng.uniform(2.0, 20.0))) for _ in range(100))
        if worst > 1e-10:
            failures.append(f"{kind} residual")
    return CheckResult("special functions", not failures, len(checks) + 2, _failed(failures))


def _failed(failures):
    if not failures:
        return ""
    head = ", ".join(str(f) for f in failures[:5])
    return f"{len(failures)} failed: {head}" + (" ..." if len(failures) > 5 else "")


def run_suite(level="quick"):
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    s = _SIZES[level]
    return [
        oracle_equality(s["oracle_n"]),
        trivial_cases(s["trivial_n"]),
        convolution_identity(s["conv_n"]),
        contour_agreement(s["contour_pairs"], s["contour_n"]),
        decomposition_identity(s["tv_n"], s["tv_brute_n"]),
        special_values(),
    ]
