"""Monte Carlo cross-checks: uniform random permutations and Poisson vectors.

Randomness comes from numpy's PCG64 generator.  A master seed is expanded
with SeedSequence.spawn into one stream per fixed-size chunk of samples, so
an estimate depends only on (seed, samples) and never on how many worker
threads processed the chunks.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from . import exact
from .errors import DomainError

ALGORITHM = "PCG64"
CHUNK = 1 << 16
CSV_HEADER = ["n", "r", "mode", "samples", "estimate", "stderr", "seed"]
KAPPA = "kappa"
NU = "nu"
MAX_N = 10 ** 6

# permutations up to this size are processed as whole numpy batches
_BATCH_MAX_N = 64


def _generator(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class CycleCountVector:
    n: int
    counts: tuple  # counts[j-1] = number of j-cycles

    def __post_init__(self):
        if sum(j * k for j, k in enumerate(self.counts, 1)) != self.n:
            raise ValueError("cycle counts do not add up to n")

    def min_cycle(self):
        return next((j for j, k in enumerate(self.counts, 1) if k), 0)

    def max_cycle(self):
        return max((j for j, k in enumerate(self.counts, 1) if k), default=0)


@dataclass(frozen=True)
class PoissonVector:
    r: int
    draws: tuple  # draws[j-1] ~ Poisson(1/j)


def cycle_counts_of(perm):
    """Cycle counts (k_1, ..., k_n) of a permutation given as an index array."""
    n = len(perm)
    counts = [0] * n
    seen = bytearray(n)
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        i = start
        while not seen[i]:
            seen[i] = 1
            i = perm[i]
            length += 1
        counts[length - 1] += 1
    return counts


def sample_cycle_counts(n, seed):
    """Cycle counts of one uniform permutation of n elements (Fisher-Yates shuffle)."""
    if not isinstance(n, (int, np.integer)) or n < 0 or n > MAX_N:
        raise DomainError(f"n must be an integer in [0, {MAX_N}]")
    if n == 0:
        return CycleCountVector(0, ())
    perm = _generator(seed).permutation(int(n)).tolist()
    return CycleCountVector(int(n), tuple(cycle_counts_of(perm)))


def sample_poisson(r, seed):
    """Independent Z_j ~ Poisson(1/j), j = 1..r."""
    if r < 1:
        raise DomainError("r must be >= 1")
    means = 1.0 / np.arange(1, r + 1)
    return PoissonVector(r, tuple(int(z) for z in _generator(seed).poisson(means)))


def poisson_batch(r, samples, seed):
    """Array of shape (samples, r) of independent Poisson(1/j) columns."""
    means = 1.0 / np.arange(1, r + 1)
    return _generator(seed).poisson(means, size=(samples, r))


def _cycle_lengths(perms):
    """For each row permutation, the length of the cycle through every position."""
    rows, n = perms.shape
    lengths = np.zeros((rows, n), dtype=np.int64)
    home = np.broadcast_to(np.arange(n), (rows, n))
    cur = perms.copy()
    for t in range(1, n + 1):
        hit = (cur == home) & (lengths == 0)
        lengths[hit] = t
        cur = np.take_along_axis(perms, cur, axis=1)
    return lengths


def _batch_perms(rng, n, size):
    return rng.permuted(np.broadcast_to(np.arange(n), (size, n)), axis=1)


def _chunk_extremes(n, size, seq):
    """(min cycle length, max cycle length) arrays for ``size`` permutations."""
    rng = _generator(seq)
    if n <= _BATCH_MAX_N:
        lengths = _cycle_lengths(_batch_perms(rng, n, size))
        return lengths.min(axis=1), lengths.max(axis=1)
    lo = np.empty(size, dtype=np.int64)
    hi = np.empty(size, dtype=np.int64)
    for i in range(size):
        counts = cycle_counts_of(rng.permutation(n).tolist())
        present = [j for j, k in enumerate(counts, 1) if k]
        lo[i], hi[i] = present[0], present[-1]
    return lo, hi


def _chunk_sizes(samples):
    full, rest = divmod(samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class DensityEstimate:
    n: int
    r: int
    mode: str
    samples: int
    estimate: float
    stderr: float
    seed: int
    algorithm: str = ALGORITHM

    def csv_row(self):
        return [self.n, self.r, self.mode, self.samples, repr(self.estimate), repr(self.stderr), self.seed]


def estimate_density(n, r, mode, samples, seed, workers=1):
    """Fraction of sampled permutations with min cycle > r (kappa) or max cycle <= r (nu).

    Returns a DensityEstimate whose stderr is the binomial sqrt(p(1-p)/samples).
    """
    if mode not in (KAPPA, NU):
        raise DomainError(f"mode must be {KAPPA!r} or {NU!r}")
    if not isinstance(samples, (int, np.integer)) or samples < 1:
        raise DomainError("samples must be a positive integer")
    if not 1 <= n <= MAX_N or r < 1:
        raise DomainError("need 1 <= n <= 10^6 and r >= 1")
    sizes = _chunk_sizes(int(samples))
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(i):
        lo, hi = _chunk_extremes(n, sizes[i], seqs[i])
        return int(np.count_nonzero(lo > r if mode == KAPPA else hi <= r))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(work, range(len(sizes))))
    else:
        hits = [work(i) for i in range(len(sizes))]
    p = sum(hits) / samples
    return DensityEstimate(n, r, mode, int(samples), p, math.sqrt(p * (1 - p) / samples), seed)


def cycle_type_frequencies(n, samples, seed):
    """Counts of each cycle type (as a tuple k_1..k_n) over ``samples`` permutations."""
    freq = {}
    seqs = np.random.SeedSequence(seed).spawn(len(_chunk_sizes(samples)))
    for size, seq in zip(_chunk_sizes(samples), seqs):
        lengths = _cycle_lengths(_batch_perms(_generator(seq), n, size))
        # positions in j-cycles, divided by j, give k_j
        flat = lengths + (n + 1) * np.arange(size)[:, None]
        per_row = np.bincount(flat.ravel(), minlength=size * (n + 1)).reshape(size, n + 1)[:, 1:]
        types = per_row // np.arange(1, n + 1)
        if (n + 1) ** n < 2 ** 62:
            # k_j <= n, so base n+1 digits identify the type in one integer
            codes = types @ ((n + 1) ** np.arange(n, dtype=np.int64))
            _, first, counts = np.unique(codes, return_index=True, return_counts=True)
            keys = types[first]
        else:
            keys, counts = np.unique(types, axis=0, return_counts=True)
        for key, c in zip(map(tuple, keys.tolist()), counts.tolist()):
            freq[key] = freq.get(key, 0) + c
    return freq


def cycle_type_chi_square(n, samples, seed):
    """Pearson chi-square of sampled cycle types against the exact cycle-type law.

    Returns (statistic, degrees of freedom, p-value).
    """
    if not 1 <= n <= _BATCH_MAX_N:
        raise DomainError(f"chi-square test supports 1 <= n <= {_BATCH_MAX_N}")
    freq = cycle_type_frequencies(n, samples, seed)
    observed, expected = [], []
    nfact = exact.factorial(n)
    for parts in exact.partitions(n):
        key = tuple(parts.get(j, 0) for j in range(1, n + 1))
        observed.append(freq.get(key, 0))
        expected.append(float(Fraction(exact.cycle_type_count(n, parts), nfact)) * samples)
    if len(observed) == 1:
        return 0.0, 0, 1.0
    res = stats.chisquare(observed, expected)
    return float(res.statistic), len(observed) - 1, float(res.pvalue)


def to_csv(estimates, handle=None):
    out = handle if handle is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for est in estimates:
        writer.writerow(est.csv_row())
    return out.getvalue() if handle is None else None
