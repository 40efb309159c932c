"""Exact densities of permutations with restricted cycle lengths.

``kappa(n, r)`` is the proportion of permutations of ``n`` elements whose
cycles are all longer than ``r``; ``nu(n, r)`` the proportion whose cycles
are all at most ``r`` long.  Both come from first-element cycle
decomposition:

    n * kappa(n, r) = sum_{j=r+1..n} kappa(n-j, r)
    n * nu(n, r)    = sum_{j=1..min(r,n)} nu(n-j, r)

Each sum is a difference of prefix sums, so a table up to ``n`` costs O(n)
arithmetic operations.  Two backends are provided: exact integer counts of
permutations, presented as ``Fraction`` values (the default, capped at
``exact_ceiling``), and mpmath floats with a fixed number of significant
digits for larger ``n``.
"""

from __future__ import annotations

import json
import math
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import gmpy2
import mpmath

from .errors import DomainError, ResourceLimitError

MIN_CYCLE = "min-cycle-length"
MAX_CYCLE = "max-cycle-length"
EXACT = "exact"
FLOAT = "float"

DEFAULT_EXACT_CEILING = 2000
DEFAULT_DIGITS = 30
BRUTE_FORCE_MAX_N = 12

TABLE_FORMAT_VERSION = 1


_FACTORIALS = [1]
_FACT_LOCK = threading.Lock()


def factorial(n):
    """Cached n! for the table denominators."""
    if n >= len(_FACTORIALS):
        with _FACT_LOCK:
            for k in range(len(_FACTORIALS), n + 1):
                _FACTORIALS.append(_FACTORIALS[-1] * k)
    return _FACTORIALS[n]


class _RatioView(Sequence):
    """Read-only sequence of Fractions ``scaled[n] / n!``, converted on access."""

    __slots__ = ("_scaled",)

    def __init__(self, scaled):
        self._scaled = scaled

    def __len__(self):
        return len(self._scaled)

    def __getitem__(self, n):
        if isinstance(n, slice):
            return [self[i] for i in range(*n.indices(len(self)))]
        if n < 0:
            n += len(self)
        return Fraction(self._scaled[n], factorial(n))


@dataclass(frozen=True)
class DensityTable:
    """Immutable table of kappa(., r) or nu(., r) for n = 0..n_max.

    The exact backend keeps integers ``counts[n] = n! * value`` (the number
    of qualifying permutations) and ``prefix_counts[n] = n! * prefix``;
    ``values`` and ``prefix_sums`` present them as Fractions.  The float
    backend stores mpmath numbers at ``digits`` significant digits.
    """

    constraint_kind: str
    r: int
    n_max: int
    backend: str
    digits: int | None
    counts: tuple = ()
    prefix_counts: tuple = ()
    floats: tuple = ()
    float_prefix: tuple = ()
    _state: tuple = field(default=(), repr=False, compare=False)

    @property
    def values(self):
        return _RatioView(self.counts) if self.backend == EXACT else self.floats

    @property
    def prefix_sums(self):
        return _RatioView(self.prefix_counts) if self.backend == EXACT else self.float_prefix

    def _zero(self):
        return Fraction(0) if self.backend == EXACT else mpmath.mpf(0)

    def __getitem__(self, n):
        if n < 0:
            # kappa(j, r) := 0 for j < 0; the same convention is used for nu
            return self._zero()
        return self.values[n]

    def prefix(self, n):
        """Sum of values[0..n]; zero for negative ``n``."""
        if n < 0:
            return self._zero()
        return self.prefix_sums[n]

    def as_mpf(self, n):
        """values[n] as an mpmath number at the current working precision."""
        if n < 0:
            return mpmath.mpf(0)
        if self.backend == EXACT:
            return mpmath.mpf(self.counts[n]) / factorial(n)
        return +self.floats[n]

    def to_json(self):
        if self.backend == EXACT:
            values = [_fraction_str(x) for x in self.values]
        else:
            values = [mpmath.nstr(x, self.digits + 5, strip_zeros=False) for x in self.floats]
        return {
            "format": "density-table",
            "version": TABLE_FORMAT_VERSION,
            "constraint_kind": self.constraint_kind,
            "r": self.r,
            "n_max": self.n_max,
            "backend": self.backend,
            "digits": self.digits,
            "values": values,
        }

    @classmethod
    def from_json(cls, data):
        if data.get("format") != "density-table" or data.get("version") != TABLE_FORMAT_VERSION:
            raise ValueError("not a density table file of a supported version")
        kind, r, backend = data["constraint_kind"], int(data["r"]), data["backend"]
        _check_kind(kind)
        if backend == EXACT:
            counts = []
            for n, s in enumerate(data["values"]):
                x = _parse_fraction(s)
                if factorial(n) % x.denominator:
                    raise ValueError(f"denominator at n={n} does not divide n!")
                counts.append(x.numerator * (factorial(n) // x.denominator))
            table = _rebuild_exact(kind, r, counts)
        else:
            digits = int(data["digits"])
            with mpmath.workdps(digits):
                floats = [mpmath.mpf(s) for s in data["values"]]
            table = _rebuild_float(kind, r, floats, digits)
        _validate(table)
        return table


def _fraction_str(x):
    # gmpy2 formatting is not subject to the int/str digit limit
    num = gmpy2.mpz(x.numerator).digits()
    return f"{num}/{gmpy2.mpz(x.denominator).digits()}" if x.denominator != 1 else num


def _parse_fraction(text):
    num, _, den = text.strip().partition("/")
    return Fraction(int(gmpy2.mpz(num)), int(gmpy2.mpz(den)) if den else 1)


def _validate(table):
    """Check a loaded table against the recurrence it claims to satisfy."""
    if table.values[0] != 1:
        raise ValueError("values[0] must be 1")
    for n, x in enumerate(table.values):
        if not 0 <= x <= 1:
            raise ValueError(f"value at n={n} outside [0, 1]")
    fresh = _extend(_seed(table.constraint_kind, table.r, table.backend, table.digits), table.n_max)
    if table.backend == EXACT:
        if fresh.counts != table.counts:
            raise ValueError("table values do not satisfy the recurrence")
    else:
        with mpmath.workdps(table.digits):
            tol = mpmath.mpf(10) ** (5 - table.digits)
            for n, (a, b) in enumerate(zip(fresh.floats, table.floats)):
                if abs(a - b) > tol * abs(a):
                    raise ValueError(f"value at n={n} does not satisfy the recurrence")


def _check_kind(kind):
    if kind not in (MIN_CYCLE, MAX_CYCLE):
        raise DomainError(f"unknown constraint kind {kind!r}")


def _rebuild_exact(kind, r, counts):
    """Table from a list of counts; recurrence state is replayed by _extend."""
    table = _extend(_seed(kind, r, EXACT, None), len(counts) - 1)
    if table.counts != tuple(counts):
        raise ValueError("table values do not satisfy the recurrence")
    return table


def _rebuild_float(kind, r, floats, digits):
    with mpmath.workdps(digits):
        prefix, acc = [], mpmath.mpf(0)
        for x in floats:
            acc += x
            prefix.append(acc)
    return DensityTable(kind, r, len(floats) - 1, FLOAT, digits, floats=tuple(floats),
                        float_prefix=tuple(prefix))


def _extend(table, n_max):
    """Return a new table reaching ``n_max``, continuing from ``table``."""
    if table.backend == EXACT:
        return _extend_exact(table, n_max)
    return _extend_float(table, n_max)


def _extend_exact(table, n_max):
    # Integer form of the recurrences with c_n = n! * value:
    #   kappa: c_n = (n-1)!/(n-r-1)! * s_{n-r-1},   s_n = n s_{n-1} + c_n
    #   nu:    c_n = t_n,  t_{n+1} = n t_n + c_n - [n >= r] c_{n-r} n!/(n-r)!
    # where s and t are n!-scaled prefix and (n-1)!-scaled window sums.
    # The falling factorial ``ff`` is carried along, so each step is O(1)
    # big-integer operations and no gcd is ever taken.
    kind, r = table.constraint_kind, table.r
    counts = list(table.counts)
    prefix = list(table.prefix_counts)
    ff, window = table._state
    for n in range(len(counts), n_max + 1):
        if kind == MIN_CYCLE:
            m = n - r - 1
            if m < 0:
                c = 0
            else:
                if m > 0:
                    ff = ff * (n - 1) // m  # (n-1)!/m! from (n-2)!/(m-1)!
                c = ff * prefix[m]
        else:
            c = window
            if n >= r:
                if n > r:
                    ff = ff * n // (n - r)  # n!/(n-r)!
                window = n * window + c - counts[n - r] * ff
            else:
                window = n * window + c
        counts.append(c)
        prefix.append(n * prefix[-1] + c)
    return replace(table, n_max=n_max, counts=tuple(counts), prefix_counts=tuple(prefix),
                   _state=(ff, window))


def _extend_float(table, n_max):
    kind, r = table.constraint_kind, table.r
    values = list(table.floats)
    prefix = list(table.float_prefix)
    with mpmath.workdps(table.digits):
        for n in range(len(values), n_max + 1):
            if kind == MIN_CYCLE:
                s = prefix[n - r - 1] if n - r - 1 >= 0 else mpmath.mpf(0)
            else:
                # prefix differences cancel catastrophically once nu decays
                s = mpmath.fsum(values[max(0, n - r):n])
            x = s / n
            values.append(x)
            prefix.append(prefix[-1] + x)
    return replace(table, n_max=n_max, floats=tuple(values), float_prefix=tuple(prefix))


def _seed(kind, r, backend, digits):
    if backend == EXACT:
        # kappa's falling factorial starts as r! = r!/0! at n = r+1;
        # nu's as r! = r!/0! at n = r
        ff = factorial(r)
        state = (ff, 1) if kind == MAX_CYCLE else (ff, None)
        return DensityTable(kind, r, 0, EXACT, None, counts=(1,), prefix_counts=(1,), _state=state)
    with mpmath.workdps(digits):
        one = mpmath.mpf(1)
    return DensityTable(kind, r, 0, FLOAT, digits, floats=(one,), float_prefix=(one,))


_TABLES: dict = {}
_LOCK = threading.Lock()


def resolve_backend(backend, n, exact_ceiling=DEFAULT_EXACT_CEILING):
    """Map ``"auto"`` to a concrete backend for a table reaching ``n``."""
    if backend == "auto":
        return EXACT if n <= exact_ceiling else FLOAT
    if backend not in (EXACT, FLOAT):
        raise DomainError(f"unknown backend {backend!r}")
    return backend


def density_table(kind, r, n_max, backend=EXACT, digits=DEFAULT_DIGITS,
                  exact_ceiling=DEFAULT_EXACT_CEILING):
    """Cached table of ``kind`` densities for threshold ``r`` covering 0..n_max.

    The returned table may extend past ``n_max``.  Tables are never mutated;
    extension publishes a fresh object under the cache lock.
    """
    _check_kind(kind)
    if n_max < 0:
        raise DomainError("n must be non-negative")
    if r < 0 or (kind == MAX_CYCLE and r < 1):
        raise DomainError(f"invalid cycle-length threshold r={r}")
    backend = resolve_backend(backend, n_max, exact_ceiling)
    if backend == EXACT and n_max > exact_ceiling:
        raise ResourceLimitError(
            f"n={n_max} exceeds the exact-arithmetic ceiling {exact_ceiling}; use the float backend")
    key = (kind, r, backend, digits if backend == FLOAT else None)
    table = _TABLES.get(key)
    if table is not None and table.n_max >= n_max:
        return table
    with _LOCK:
        table = _TABLES.get(key) or _seed(kind, r, backend, digits)
        if table.n_max < n_max:
            table = _extend(table, n_max)
            _TABLES[key] = table
    return table


def clear_cache():
    with _LOCK:
        _TABLES.clear()


def cached_tables():
    """Snapshot of every table currently in the cache."""
    with _LOCK:
        return list(_TABLES.values())


def _check_n_r(n, r):
    if not isinstance(n, int) or not isinstance(r, int):
        raise DomainError("n and r must be integers")
    if n < 0 or r < 0:
        raise DomainError(f"n and r must be non-negative (got n={n}, r={r})")


def kappa_exact(n, r, backend=EXACT, digits=DEFAULT_DIGITS, exact_ceiling=DEFAULT_EXACT_CEILING):
    """Proportion of permutations of ``n`` elements with every cycle longer than ``r``.

    >>> kappa_exact(7, 2)
    Fraction(19, 84)
    """
    _check_n_r(n, r)
    return density_table(MIN_CYCLE, r, n, backend, digits, exact_ceiling)[n]


def nu_exact(n, r, backend=EXACT, digits=DEFAULT_DIGITS, exact_ceiling=DEFAULT_EXACT_CEILING):
    """Proportion of permutations of ``n`` elements with every cycle at most ``r`` long."""
    _check_n_r(n, r)
    if r < 1:
        raise DomainError("nu requires r >= 1")
    return density_table(MAX_CYCLE, r, n, backend, digits, exact_ceiling)[n]


_HARMONIC = [Fraction(0)]
_HARMONIC_LOCK = threading.Lock()


def harmonic(r):
    """Exact harmonic number H_r = 1 + 1/2 + ... + 1/r."""
    if not isinstance(r, int) or r < 1:
        raise DomainError(f"harmonic number needs r >= 1 (got {r!r})")
    if r >= len(_HARMONIC):
        with _HARMONIC_LOCK:
            for j in range(len(_HARMONIC), r + 1):
                _HARMONIC.append(_HARMONIC[-1] + Fraction(1, j))
    return _HARMONIC[r]


def partitions(n, max_part=None):
    """Yield the partitions of ``n`` as dicts ``{part: multiplicity}``."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield {}
        return
    for part in range(min(n, max_part), 0, -1):
        for rest in partitions(n - part, part):
            out = dict(rest)
            out[part] = out.get(part, 0) + 1
            yield out


def cycle_type_count(n, counts):
    """Number of permutations of ``n`` elements with ``counts[j]`` cycles of length j."""
    denom = 1
    for j, k in counts.items():
        denom *= j ** k * math.factorial(k)
    return math.factorial(n) // denom


def brute_force_density(n, kind, r):
    """Density by enumerating cycle types; independent of the recurrences.

    Sums n!/prod(j^k_j k_j!) over partitions of ``n`` that satisfy the
    constraint, then divides by n!.
    """
    _check_kind(kind)
    _check_n_r(n, r)
    if n > BRUTE_FORCE_MAX_N:
        raise ResourceLimitError(f"brute-force enumeration is limited to n <= {BRUTE_FORCE_MAX_N}")
    if kind == MIN_CYCLE:
        ok = lambda parts: all(j > r for j in parts)  # noqa: E731
    else:
        ok = lambda parts: all(j <= r for j in parts)  # noqa: E731
    total = sum(cycle_type_count(n, p) for p in partitions(n) if ok(p))
    return Fraction(total, math.factorial(n))


def save_table(table, directory):
    """Write ``table`` under ``directory``; returns the file path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tag = "kappa" if table.constraint_kind == MIN_CYCLE else "nu"
    suffix = "exact" if table.backend == EXACT else f"float{table.digits}"
    path = directory / f"{tag}_r{table.r}_{suffix}.json"
    path.write_text(json.dumps(table.to_json()))
    return path


def load_table(path, publish=True):
    """Read a table file, validate it and (optionally) seed the cache with it."""
    table = DensityTable.from_json(json.loads(Path(path).read_text()))
    if publish:
        key = (table.constraint_kind, table.r, table.backend, table.digits)
        with _LOCK:
            current = _TABLES.get(key)
            if current is None or current.n_max < table.n_max:
                _TABLES[key] = table
    return table
