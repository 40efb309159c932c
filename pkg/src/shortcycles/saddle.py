"""kappa(n, r) from its Cauchy integral, taken on the saddle-point circle.

The generating function is

    sum_n kappa(n, r) z^n = exp(sum_{j>r} z^j / j) = exp(-log(1 - z) - sum_{j<=r} z^j / j),

so kappa(n, r) = (1/2 pi) int_0^{2 pi} F(x e^{it}) x^{-n} e^{-int} dt.  The
radius x solves x F'(x)/F(x) = n, i.e. x^{r+1} / (1 - x) = n, and the
integral is approximated by the trapezoidal rule, which converges
geometrically for this periodic analytic integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DomainError

STATUS_OK = "ok"
STATUS_WARN = "accuracy-warning"

# relative aliasing target for the automatic sample count
_ALIAS_TARGET = 1e-14


def log_gf(z, r):
    """Principal log of the generating function of kappa(., r) at ``z`` (|z| < 1).

    Accepts a scalar or a numpy array.
    """
    if r < 1:
        raise DomainError("log_gf needs r >= 1")
    arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(arr) >= 1):
        raise DomainError("log_gf is defined for |z| < 1")
    # Horner for sum_{j=1..r} z^j / j
    acc = np.zeros_like(arr)
    for j in range(r, 0, -1):
        acc = (acc + 1.0 / j) * arr
    out = -np.log1p(-arr) - acc
    return complex(out) if np.ndim(z) == 0 else out


def _saddle_lhs(x, r):
    # x/(1-x) - sum_{j<=r} x^j, in the cancellation-free form x^{r+1}/(1-x)
    return x ** (r + 1) / (1.0 - x)


def saddle_radius(n, r):
    """Root in (0, 1) of x^{r+1} / (1 - x) = n.

    Bisection to 1e-14 followed by Newton steps on the log of the
    equation, (r+1) log x - log(1-x) = log n.  Returns (x, residual)
    where the residual is relative: |lhs(x) / n - 1|.
    """
    if not (isinstance(n, int) and isinstance(r, int)) or not 1 <= r < n:
        raise DomainError(f"need integers 1 <= r < n (got n={n}, r={r})")
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if _saddle_lhs(mid, r) < n:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    target = math.log(n)
    for _ in range(4):
        g = (r + 1) * math.log(x) - math.log1p(-x) - target
        dg = (r + 1) / x + 1.0 / (1.0 - x)
        x_new = x - g / dg
        if not 0.0 < x_new < 1.0:
            break
        x = x_new
    residual = abs(_saddle_lhs(x, r) / n - 1.0)
    return x, residual


def auto_num_points(n, r, x=None):
    """Power of two >= 8(n+1) that also pushes the aliasing error below target.

    Trapezoid aliasing adds sum_{k>=1} kappa(n + kN) x^{kN} <= x^N / (1 - x^N),
    and kappa(n, r) >= 1/n (the n-cycles), so the relative error is at most
    about n x^N.
    """
    if x is None:
        x, _ = saddle_radius(n, r)
    need = (math.log(n) - math.log(_ALIAS_TARGET)) / -math.log(x)
    m = max(8 * (n + 1), int(math.ceil(need)))
    return 1 << (m - 1).bit_length()


@dataclass(frozen=True)
class SaddleConfig:
    n: int
    r: int
    radius: float
    num_points: int
    estimated_condition: float
    saddle_residual: float


@dataclass(frozen=True)
class ContourResult:
    value: float
    imag_residue: float  # relative; imaginary parts of the real-axis samples
    alias_bound: float  # relative, n x^N / (1 - x^N)
    halving_change: float  # relative change against the N/2-point rule
    status: str
    config: SaddleConfig


def _half_circle_samples(n, r, x, num_points):
    """Integrand exp(log F(z) - n log z - shift) at t = 2 pi k / N, k = 0..N/2."""
    k = np.arange(num_points // 2 + 1)
    theta = 2.0 * np.pi * k / num_points
    z = x * np.exp(1j * theta)
    expo = log_gf(z, r) - n * (math.log(x) + 1j * theta)
    shift = float(np.max(expo.real))
    return np.exp(expo - shift), shift


def _trapezoid_half(f, num_points):
    # conjugate symmetry: interior samples count twice, t = 0 and t = pi once
    interior = f[1:-1].real
    return (f[0].real + f[-1].real + 2.0 * np.sum(interior)) / num_points


def kappa_contour(n, r, num_points=None):
    """kappa(n, r) by trapezoidal quadrature of the Cauchy integral.

    Returns a ContourResult.  ``status`` is STATUS_WARN when the imaginary
    residue or the aliasing bound exceeds 1e-8 relative.
    """
    x, resid = saddle_radius(n, r)
    if num_points is None:
        num_points = auto_num_points(n, r, x)
    if num_points < 2 * (n + 1) or num_points % 2:
        raise DomainError("num_points must be even and at least 2(n+1)")
    f, shift = _half_circle_samples(n, r, x, num_points)
    value_scaled = _trapezoid_half(f, num_points)
    # every other sample is the N/2-point rule
    coarse = _trapezoid_half(f[::2], num_points // 2) if num_points % 4 == 0 else value_scaled
    scale = math.exp(shift)
    value = value_scaled * scale
    mags = np.abs(f)
    cond = float(mags.max() / abs(value_scaled)) if value_scaled else math.inf
    imag = float(abs(f[0].imag) + abs(f[-1].imag)) / num_points / abs(value_scaled)
    halving = abs(value_scaled - coarse) / abs(value_scaled)
    xn = x ** num_points
    alias = n * xn / (1.0 - xn)
    status = STATUS_OK if max(imag, alias) <= 1e-8 else STATUS_WARN
    value = float(min(max(value, 0.0), 1.0))
    cfg = SaddleConfig(n, r, x, num_points, cond, resid)
    return ContourResult(value, float(imag), alias, float(halving), status, cfg)


def kappa_contour_mp(n, r, num_points=None, dps=30):
    """High-precision variant of kappa_contour (mpmath arithmetic throughout).

    Intended for spot checks beyond the double-precision range; cost is
    O(num_points * r) multiprecision operations.
    """
    if not 1 <= r < n:
        raise DomainError(f"need 1 <= r < n (got n={n}, r={r})")
    with mpmath.workdps(dps + 10):
        x0, _ = saddle_radius(n, r)
        x = mpmath.findroot(lambda t: (r + 1) * mpmath.log(t) - mpmath.log(1 - t) - mpmath.log(n),
                            mpmath.mpf(x0))
        if num_points is None:
            num_points = auto_num_points(n, r, x0)
            # aliasing must also fall below the requested precision
            need = (math.log(n) + dps * math.log(10)) / -math.log(x0)
            num_points = max(num_points, 1 << (int(math.ceil(need)) - 1).bit_length())
        coeffs = [mpmath.mpf(1) / j for j in range(r, 0, -1)]

        def expo(theta):
            z = x * mpmath.expjpi(2 * theta)
            acc = mpmath.mpc(0)
            for c in coeffs:
                acc = (acc + c) * z
            return -mpmath.log(1 - z) - acc - n * (mpmath.log(x) + 2j * mpmath.pi * theta)

        half = num_points // 2
        shift = expo(mpmath.mpf(0)).real
        total = mpmath.mpf(0)
        for k in range(half + 1):
            w = 1 if k in (0, half) else 2
            total += w * mpmath.exp(expo(mpmath.mpf(k) / num_points) - shift).real
        value = total / num_points * mpmath.exp(shift)
    with mpmath.workdps(dps):
        return +value
