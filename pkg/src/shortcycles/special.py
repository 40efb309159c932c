"""Buchstab's omega and Dickman's rho from their delay differential equations.

Both functions are represented piecewise: on each unit interval [k, k+1]
the solution is a Chebyshev series in the local variable s = 2(v - k) - 1.
Because the delay is exactly one, the delayed term on [k, k+1] has the
same local coefficients as the solution on [k-1, k], so each step is an
exact Chebyshev integration plus one interpolation:

    v omega(v) = k omega(k) + int_k^v omega(t - 1) dt          (v >= 2)

Dickman's function is collocated on the equivalent positive form
v rho(v) = int_{v-1}^v rho(t) dt, which keeps relative accuracy as rho
decays; each interval is rescaled to start at 1 and the log of the scale
is stored alongside.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import mpmath
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct

from .errors import AccuracyError, DomainError

BUCHSTAB = "buchstab"
DICKMAN = "dickman"

DEFAULT_DEGREE = 40
DEFAULT_TOL = 1e-13
DEFAULT_V_MAX = {BUCHSTAB: 50.0, DICKMAN: 50.0}

SOLUTION_FORMAT_VERSION = 1

# Euler-Mascheroni constant, 60 digits.
EULER_GAMMA_STR = "0.577215664901532860606512090082402431042159335939923598805767"
EULER_GAMMA = float(EULER_GAMMA_STR)


def euler_gamma(digits=50):
    """The Euler-Mascheroni constant as an mpmath number with ``digits`` digits."""
    if digits > 60:
        raise DomainError("stored constant carries 60 digits")
    with mpmath.workdps(digits):
        return +mpmath.mpf(EULER_GAMMA_STR)


@dataclass(frozen=True)
class PiecewiseSolution:
    """Chebyshev coefficients of omega or rho on consecutive unit intervals.

    ``intervals[i]`` is ``(left, coeffs)`` for the interval [left, left+1];
    the function there equals ``exp(log_scales[i])`` times the series, so
    rho stays representable far past the double-precision underflow.
    ``est_error[i]`` bounds the truncation error seen in that interval's
    coefficient tail, relative to the interval scale.
    """

    kind: str
    degree: int
    intervals: tuple
    v_max: float
    est_error: tuple
    log_scales: tuple = ()

    def _scale(self, i):
        return self.log_scales[i] if self.log_scales else 0.0

    @property
    def v_min(self):
        return self.intervals[0][0]

    def _locate(self, v):
        i = min(int(math.floor(v)) - self.v_min, len(self.intervals) - 1)
        left, coeffs = self.intervals[i]
        return i, coeffs, 2.0 * (v - left) - 1.0

    def _check_range(self, v):
        if v < self.v_min or v > self.v_max:
            raise DomainError(f"v={v} outside the solved range [{self.v_min}, {self.v_max}]")

    def __call__(self, v):
        v = float(v)
        self._check_range(v)
        if self.kind == BUCHSTAB and v <= 2.0:
            return 1.0 / v
        if self.kind == DICKMAN and v <= 1.0:
            return 1.0
        i, coeffs, s = self._locate(v)
        return float(C.chebval(s, coeffs)) * math.exp(self._scale(i))

    def log_value(self, v):
        """Natural log of the (positive) solution at ``v``."""
        v = float(v)
        self._check_range(v)
        i, coeffs, s = self._locate(v)
        return math.log(float(C.chebval(s, coeffs))) + self._scale(i)

    def derivative(self, v):
        """Derivative taken from the polynomial representation."""
        i, coeffs, s = self._locate(float(v))
        return float(C.chebval(s, C.chebder(coeffs))) * 2.0 * math.exp(self._scale(i))

    def residual(self, v):
        """Defect of the delay equation at ``v`` (zero for the exact solution)."""
        if self.kind == BUCHSTAB:
            if v < 2.0:
                raise DomainError("the Buchstab equation holds for v > 2")
            return self(v) + v * self.derivative(v) - self(v - 1.0)
        if v < 1.0:
            raise DomainError("the Dickman equation holds for v > 1")
        return v * self.derivative(v) + self(v - 1.0)

    def to_json(self):
        return {
            "format": "piecewise-solution",
            "version": SOLUTION_FORMAT_VERSION,
            "kind": self.kind,
            "degree": self.degree,
            "v_max": self.v_max,
            "intervals": [
                {"left": left, "log_scale": repr(float(self._scale(i))),
                 "coeffs": [repr(float(c)) for c in coeffs], "est_error": repr(float(err))}
                for i, ((left, coeffs), err) in enumerate(zip(self.intervals, self.est_error))
            ],
        }

    @classmethod
    def from_json(cls, data):
        if data.get("format") != "piecewise-solution" or data.get("version") != SOLUTION_FORMAT_VERSION:
            raise ValueError("not a piecewise solution file of a supported version")
        intervals = tuple(
            (int(item["left"]), np.array([float(c) for c in item["coeffs"]]))
            for item in data["intervals"]
        )
        est = tuple(float(item["est_error"]) for item in data["intervals"])
        scales = tuple(float(item.get("log_scale", 0.0)) for item in data["intervals"])
        sol = cls(data["kind"], int(data["degree"]), intervals, float(data["v_max"]), est, scales)
        validate_solution(sol)
        return sol


def validate_solution(sol):
    """Check the invariants of a loaded or freshly built solution."""
    if sol.kind not in (BUCHSTAB, DICKMAN):
        raise ValueError(f"unknown kind {sol.kind!r}")
    expected_left = 1 if sol.kind == BUCHSTAB else 0
    for i, (left, _) in enumerate(sol.intervals):
        if left != expected_left + i:
            raise ValueError("intervals must be consecutive unit intervals")
    first = sol.intervals[0][1]
    tol = max(sol.est_error[0], 1e-15) * 10
    if sol.kind == BUCHSTAB:
        for v in (1.0, 1.25, 1.5, 1.75, 2.0):
            if abs(C.chebval(2.0 * (v - 1.0) - 1.0, first) - 1.0 / v) > tol:
                raise ValueError("interval 0 does not reproduce omega(v) = 1/v")
    elif not (first[0] == 1.0 and not np.any(first[1:])):
        raise ValueError("interval 0 does not reproduce rho(v) = 1")
    for i in range(1, len(sol.intervals)):
        # compare in the scale of interval i
        left_val = C.chebval(-1.0, sol.intervals[i][1])
        right_val = C.chebval(1.0, sol.intervals[i - 1][1]) * math.exp(sol._scale(i - 1) - sol._scale(i))
        tol = 10 * max(sol.est_error[i], sol.est_error[i - 1], 1e-15 * abs(right_val))
        if not abs(left_val - right_val) <= tol:
            raise ValueError(f"discontinuity at v={sol.intervals[i][0]}")
    if sol.kind == DICKMAN:
        for left, coeffs in sol.intervals[1:]:
            vals = C.chebval(np.linspace(-1.0, 1.0, 9), coeffs)
            if np.any(vals <= 0) or np.any(np.diff(vals) >= 0):
                raise ValueError(f"rho not positive and decreasing on [{left}, {left + 1}]")


def _chebnodes(m):
    return np.cos(np.pi * (np.arange(m) + 0.5) / m)


def _interpolate(f, degree):
    """Chebyshev coefficients of the interpolant of ``f`` at first-kind nodes."""
    m = degree + 1
    c = dct(f(_chebnodes(m)), type=2) / m
    c[0] /= 2
    return c


def _tail_error(coeffs):
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    return float(np.max(np.abs(coeffs[-3:]))) + 4 * np.finfo(float).eps * scale


def solve_delay_ode(kind, v_max=None, degree=DEFAULT_DEGREE, tol=DEFAULT_TOL):
    """March the delay equation of ``kind`` from its initial interval to ``v_max``.

    Raises AccuracyError (with the interval index) when the coefficient tail
    on some interval exceeds ``tol``.
    """
    if kind not in (BUCHSTAB, DICKMAN):
        raise DomainError(f"unknown kind {kind!r}")
    if not 8 <= degree <= 200:
        raise DomainError("degree must lie in [8, 200]")
    if v_max is None:
        v_max = DEFAULT_V_MAX[kind]
    lo = 1 if kind == BUCHSTAB else 0
    if v_max < lo + 1:
        raise DomainError(f"v_max must be at least {lo + 1} for {kind}")
    n_intervals = int(math.ceil(v_max)) - lo

    if kind == BUCHSTAB:
        first = _interpolate(lambda s: 1.0 / (1.5 + 0.5 * s), degree)
    else:
        first = np.zeros(degree + 1)
        first[0] = 1.0
    intervals = [(lo, first)]
    scales = [0.0]
    errors = [_tail_error(first) if kind == BUCHSTAB else 0.0]
    if errors[0] > tol:
        raise AccuracyError(f"degree {degree} too small on interval 0", interval=0)

    if kind == DICKMAN:
        ops = _collocation_operators(degree)
    for i in range(1, n_intervals):
        k = lo + i
        prev = intervals[-1][1]
        if kind == BUCHSTAB:
            # v omega(v) on [k, k+1]; the delayed term reuses prev as is
            g = C.chebint(prev, lbnd=-1, scl=0.5)
            g[0] += k * C.chebval(1.0, prev)
            coeffs = _interpolate(lambda s: C.chebval(s, g) / (k + 0.5 * (s + 1.0)), degree)
        else:
            coeffs = _dickman_step(prev, k, ops)
        join = C.chebval(1.0, prev)
        err = max(_tail_error(coeffs), abs(C.chebval(-1.0, coeffs) - join))
        if err > tol:
            raise AccuracyError(
                f"degree {degree} cannot reach {tol:g} on interval {i} ([{k}, {k + 1}])", interval=i)
        log_scale = scales[-1]
        if kind == DICKMAN:
            # renormalise so the series starts at 1 on every interval
            start = C.chebval(-1.0, coeffs)
            coeffs = coeffs / start
            err = err / start
            log_scale += math.log(start)
        intervals.append((k, coeffs))
        scales.append(float(log_scale))
        errors.append(float(err))

    return PiecewiseSolution(kind, degree, tuple(intervals), float(lo + n_intervals),
                             tuple(errors), tuple(scales))


def _collocation_operators(degree):
    """Basis values at first-kind Chebyshev nodes, times s, and integrated from -1.

    The integral is taken with respect to v = k + (s + 1)/2, hence the 1/2.
    """
    m = degree + 1
    nodes = _chebnodes(m)
    eye = np.eye(m)
    basis = np.column_stack([C.chebval(nodes, e) for e in eye])
    integ = np.column_stack([C.chebval(nodes, C.chebint(e, lbnd=-1, scl=0.5)) for e in eye])
    return nodes, basis, nodes[:, None] * basis, integ


def _dickman_step(prev, k, ops):
    """Collocate v rho(v) - int_k^v rho = int_{v-1}^k rho on [k, k+1].

    Every term is positive, so relative accuracy survives the
    super-exponential decay; the subtractive form rho(k) - int rho(t-1)/t
    cancels catastrophically after a dozen intervals.
    """
    nodes, basis, s_basis, integ = ops
    anti = C.chebint(prev, lbnd=-1, scl=0.5)
    rhs = C.chebval(1.0, anti) - C.chebval(nodes, anti)
    mat = (k + 0.5) * basis + 0.5 * s_basis - integ
    return np.linalg.solve(mat, rhs)


_SOLUTIONS: dict = {}
_SOL_LOCK = threading.Lock()


def default_solution(kind, v=None):
    """Shared solution of ``kind`` covering at least ``v``; rebuilt (never mutated) to extend."""
    sol = _SOLUTIONS.get(kind)
    need = max(DEFAULT_V_MAX[kind], math.ceil(v) if v is not None else 0)
    if sol is not None and sol.v_max >= need:
        return sol
    with _SOL_LOCK:
        sol = _SOLUTIONS.get(kind)
        if sol is None or sol.v_max < need:
            sol = solve_delay_ode(kind, need)
            _SOLUTIONS[kind] = sol
    return sol


def cached_solutions():
    with _SOL_LOCK:
        return list(_SOLUTIONS.values())


def omega(v):
    """Buchstab's function for v >= 1."""
    if not v >= 1:
        raise DomainError(f"omega is defined for v >= 1 (got {v})")
    if v <= 2:
        return 1.0 / v
    return default_solution(BUCHSTAB, v)(v)


def rho(v):
    """Dickman's function for v >= 0 (underflows to 0.0 for very large v)."""
    if not v >= 0:
        raise DomainError(f"rho is defined for v >= 0 (got {v})")
    if v <= 1:
        return 1.0
    return default_solution(DICKMAN, v)(v)


def log_rho(v):
    """Natural log of Dickman's function, computed in log space (no underflow)."""
    if not v > 0:
        raise DomainError(f"log_rho needs v > 0 (got {v})")
    if v <= 1:
        return 0.0
    return default_solution(DICKMAN, v).log_value(v)


def save_solution(sol, directory):
    """Write ``sol`` as a JSON table file under ``directory``; returns the path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{sol.kind}_deg{sol.degree}_v{int(sol.v_max)}.json"
    path.write_text(json.dumps(sol.to_json()))
    return path


def load_solution(path, publish=True):
    """Read and validate a solution file; optionally make it the shared default."""
    sol = PiecewiseSolution.from_json(json.loads(Path(path).read_text()))
    if publish and sol.degree == DEFAULT_DEGREE:
        with _SOL_LOCK:
            current = _SOLUTIONS.get(sol.kind)
            if current is None or current.v_max < sol.v_max:
                _SOLUTIONS[sol.kind] = sol
    return sol


class _TaylorPieces:
    """High-precision omega or rho from Taylor series about interval midpoints.

    A second, independent route to the same functions for work below double
    precision (asymptotic error measurements need omega(u) - e^-gamma to
    dozens of digits).  On [k, k+1] with midpoint m the delay equations give,
    for rho(m + y) = sum a_i y^i and the piece below b_i,

        a_{i+1} = -(b_i + i a_i) / (m (i + 1)),

    and for g = v omega(v): g_{i+1} = b_i / (i + 1), omega_i = (g_i - omega_{i-1}) / m.
    The constant term comes from continuity at k.  The nearest singularity of
    each piece is at least 3/2 from its midpoint, so terms shrink like 3^-i.
    """

    def __init__(self, kind, dps):
        self.kind = kind
        self.dps = dps
        self.terms = int(2.2 * dps) + 30
        with mpmath.workdps(dps):
            m = mpmath.mpf(3) / 2
            if kind == DICKMAN:
                a = [1 - mpmath.log(m)] + [-(-1) ** (i + 1) / (i * m ** i) for i in range(1, self.terms)]
            else:
                a = [(-1) ** i / m ** (i + 1) for i in range(self.terms)]
        self.pieces = [a]

    def _extend(self, k_max):
        half = mpmath.mpf(1) / 2
        with mpmath.workdps(self.dps):
            for k in range(len(self.pieces) + 1, k_max + 1):
                m = k + half
                b = self.pieces[-1]
                left = mpmath.polyval(b[::-1], half)
                if self.kind == DICKMAN:
                    a = [mpmath.mpf(0)] * self.terms
                    for i in range(self.terms - 1):
                        a[i + 1] = -(b[i] + i * a[i]) / (m * (i + 1))
                    a[0] = left - mpmath.polyval(a[::-1], -half)
                else:
                    g = [mpmath.mpf(0)] + [b[i] / (i + 1) for i in range(self.terms - 1)]
                    g[0] = k * left - mpmath.polyval(g[::-1], -half)
                    a = [g[0] / m]
                    for i in range(1, self.terms):
                        a.append((g[i] - a[i - 1]) / m)
                self.pieces.append(a)

    def __call__(self, v):
        with mpmath.workdps(self.dps):
            v = mpmath.mpf(v)
            k = int(mpmath.floor(v))
            if k == v and k > 1:
                k -= 1
            if k > len(self.pieces):
                self._extend(k)
            return mpmath.polyval(self.pieces[k - 1][::-1], v - k - mpmath.mpf(1) / 2)


_HP: dict = {}
_HP_LOCK = threading.Lock()


def _hp_pieces(kind, dps):
    # round up so nearby requests share one cached expansion
    dps = 20 * ((dps + 19) // 20)
    with _HP_LOCK:
        pieces = _HP.get((kind, dps))
        if pieces is None:
            pieces = _HP[(kind, dps)] = _TaylorPieces(kind, dps)
    return pieces


def omega_hp(v, dps=50):
    """Buchstab's omega to about ``dps`` significant digits (mpmath result)."""
    with mpmath.workdps(dps + 10):
        v = mpmath.mpf(v)
    if not v >= 1:
        raise DomainError(f"omega is defined for v >= 1 (got {v})")
    if v <= 2:
        with mpmath.workdps(dps):
            return 1 / v
    pieces = _hp_pieces(BUCHSTAB, dps + 10)
    with _HP_LOCK:
        val = pieces(v)
    with mpmath.workdps(dps):
        return +val


def rho_hp(v, dps=50):
    """Dickman's rho to about ``dps`` significant digits, relative (mpmath result).

    The continuity step subtracts nearly equal numbers, so the working
    precision is raised by the number of leading zeros of rho(v).
    """
    with mpmath.workdps(dps + 10):
        v = mpmath.mpf(v)
    if not v >= 0:
        raise DomainError(f"rho is defined for v >= 0 (got {v})")
    if v <= 1:
        return mpmath.mpf(1)
    lost = int(-log_rho(float(v)) / math.log(10)) + 1
    pieces = _hp_pieces(DICKMAN, dps + lost + 10)
    with _HP_LOCK:
        val = pieces(v)
    with mpmath.workdps(dps):
        return +val
