"""Scalar geometry on spheres and balls.

Cap measures on the unit sphere, ball volumes, law-of-cosines chords and the
explicit stability constant.  Every function accepts scalars or numpy arrays
where that makes sense and returns floats / arrays of floats.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

MIN_DIM = 2
MAX_DIM = 8

# clamp excursions above this are reported, they usually mean a logic error upstream
CLAMP_WARN = 1e-9

_GL64_X, _GL64_W = np.polynomial.legendre.leggauss(64)


def check_dimension(n, lo: int = MIN_DIM) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise ValueError(f"dimension must be an integer, got {n!r}")
    if not lo <= n <= MAX_DIM:
        raise ValueError(f"dimension {n} outside [{lo}, {MAX_DIM}]")
    return int(n)


def clamp_unit(x, what: str = "cosine"):
    """Clamp to [-1, 1], logging excursions larger than CLAMP_WARN."""
    x = np.asarray(x, dtype=float)
    excess = np.max(np.abs(x), initial=0.0) - 1.0
    if excess > CLAMP_WARN:
        log.warning("clamped %s by %.3e", what, excess)
    out = np.clip(x, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n via V_n = V_{n-2} * 2*pi/n."""
    n = check_dimension(n, lo=0)
    vol = 1.0 if n % 2 == 0 else 2.0
    for k in range(2 + n % 2, n + 1, 2):
        vol *= 2.0 * math.pi / k
    return vol


def sphere_area(n: int) -> float:
    """H^{n-1} measure of the unit sphere in R^n (n*|B^n|)."""
    n = check_dimension(n, lo=1)
    return n * unit_ball_volume(n)


# ---------------------------------------------------------------------------
# integrals of sin^k on [0, alpha]


def _sinc_power_series(k: int, terms: int = 24) -> np.ndarray:
    """Coefficients b_m with (sin x / x)^k = sum_m b_m x^(2m)."""
    m = np.arange(terms)
    base = np.array([(-1.0) ** j / math.factorial(2 * j + 1) for j in m])
    out = np.zeros(terms)
    out[0] = 1.0
    for _ in range(k):
        out = np.convolve(out, base)[:terms]
    return out


def _integrated_series(k: int) -> np.ndarray:
    # coefficients of int_0^a sin^k / a^(k+1) in a^2, cut where they drop below 1e-18
    c = _sinc_power_series(k) / (k + 1 + 2 * np.arange(24))
    return c[: np.flatnonzero(np.abs(c) > 1e-18).max() + 1]


_SERIES = {k: _integrated_series(k) for k in range(0, MAX_DIM)}


def _sin_power_integral(k: int, alpha: np.ndarray) -> np.ndarray:
    """int_0^alpha sin(x)^k dx for alpha in [0, pi/2], relative accuracy near 0."""
    if k == 0:
        return alpha.copy()
    if k == 1:
        return 2.0 * np.sin(0.5 * alpha) ** 2
    out = np.empty_like(alpha)
    small = alpha < 1.0
    if np.any(small):
        a = alpha[small]
        u = a * a
        coeff = _SERIES[k]
        acc = np.full_like(a, coeff[-1])
        for c in coeff[-2::-1]:
            acc = acc * u + c
        out[small] = acc * a ** (k + 1)
    if np.any(~small):
        a = alpha[~small]
        s, c = np.sin(a), np.cos(a)
        acc = a.copy() if k % 2 == 0 else 2.0 * np.sin(0.5 * a) ** 2
        for j in range(2 + k % 2, k + 1, 2):
            acc = -(s ** (j - 1)) * c / j + (j - 1) / j * acc
        out[~small] = acc
    return out


def _as_angles(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > math.pi):
        raise ValueError("cap angle outside [0, pi]")
    return a


def cap_area(n: int, alpha):
    """H^{n-1} of the open geodesic cap of radius alpha on the unit sphere of R^n.

    Closed forms for n = 2, 3; for n >= 4 the exact reduction formula for
    int sin^(n-2), switched to its Taylor series below alpha = 1 so that tiny
    caps keep full relative accuracy.  Caps wider than pi/2 are evaluated as
    the complement of the antipodal cap, which makes cap_area(n, pi) exact.
    """
    n = check_dimension(n)
    a = _as_angles(alpha)
    scalar = a.ndim == 0
    out = _cap_area_raw(n, np.atleast_1d(a))
    return float(out[0]) if scalar else out


def _cap_area_raw(n: int, a: np.ndarray) -> np.ndarray:
    # no argument checks: hot loops pass angles already known to lie in [0, pi]
    if n == 2:
        return 2.0 * a
    if n == 3:
        s = np.sin(0.5 * a)
        return (4.0 * math.pi) * (s * s)
    full = sphere_area(n)
    wide = a > 0.5 * math.pi
    lo = np.where(wide, math.pi - a, a)
    part = sphere_area(n - 1) * _sin_power_integral(n - 2, lo)
    return np.where(wide, full - part, part)


def _cap_area_abs(n: int, a: np.ndarray) -> np.ndarray:
    # reduction formula on all of [0, pi]: absolute (not relative) accuracy, no checks
    if n == 2:
        return 2.0 * a
    sn = np.sin(0.5 * a)
    if n == 3:
        return (4.0 * math.pi) * (sn * sn)
    k = n - 2
    s, c = np.sin(a), np.cos(a)
    acc = a.copy() if k % 2 == 0 else 2.0 * sn * sn
    for j in range(2 + k % 2, k + 1, 2):
        acc = (j - 1) / j * acc - (s ** (j - 1)) * c / j
    return sphere_area(n - 1) * acc


def cap_area_quadrature(n: int, alpha):
    """Same measure as cap_area, by composite Gauss-Legendre (64 nodes per pi/2 panel).

    Kept as an independent route; cap_area is the production path.
    """
    n = check_dimension(n)
    a = _as_angles(alpha)
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    half = 0.5 * math.pi
    total = np.zeros_like(a)
    for lo in (0.0, half):
        hi = np.clip(a, lo, lo + half)
        width = hi - lo
        nodes = lo + 0.5 * width[:, None] * (_GL64_X[None, :] + 1.0)
        total += 0.5 * width * (np.sin(nodes) ** (n - 2) @ _GL64_W)
    out = sphere_area(n - 1) * total
    return float(out[0]) if scalar else out


def cap_area_derivative(n: int, alpha):
    """d/dalpha of cap_area: s_{n-2} sin(alpha)^{n-2}."""
    n = check_dimension(n)
    a = _as_angles(alpha)
    return sphere_area(n - 1) * np.sin(a) ** (n - 2)


def inverse_cap_area(n: int, area, tol: float = 1e-13):
    """Cap angle whose measure is `area`; bisection for n >= 4, closed forms otherwise."""
    n = check_dimension(n)
    a = np.asarray(area, dtype=float)
    full = sphere_area(n)
    if np.any(~np.isfinite(a)) or np.any(a < 0.0) or np.any(a > full * (1 + 1e-15)):
        raise ValueError(f"cap area outside [0, {full}]")
    scalar = a.ndim == 0
    a = np.minimum(np.atleast_1d(a), full)
    if n == 2:
        out = 0.5 * a
    elif n == 3:
        out = 2.0 * np.arcsin(np.sqrt(np.clip(a / full, 0.0, 1.0)))
    else:
        lo = np.zeros_like(a)
        hi = np.full_like(a, math.pi)
        steps = int(math.ceil(math.log2(math.pi / tol)))
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            below = cap_area(n, mid) < a
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        # the full sphere is attained on a flat stretch below pi; report pi itself
        out = np.where(a >= full, math.pi, 0.5 * (lo + hi))
    out = np.clip(out, 0.0, math.pi)
    return float(out[0]) if scalar else out


def chord(r1, r2, theta):
    """Distance between points at radii r1, r2 separated by angle theta."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if np.any(r1 < 0) or np.any(r2 < 0):
        raise ValueError("radii must be non-negative")
    # (r1-r2)^2 + 4 r1 r2 sin^2(theta/2) avoids cancellation near theta = 0
    sq = (r1 - r2) ** 2 + 4.0 * r1 * r2 * np.sin(0.5 * np.asarray(theta, dtype=float)) ** 2
    out = np.sqrt(sq)
    return float(out) if out.ndim == 0 else out


def psi(s, t, eps):
    """Geodesic radius, around -p, of the part of the sphere of radius 1-eps+t
    lying at distance more than 2 from (1+eps-s) p.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if not 0.0 < eps < 4.0 / 9.0:
        raise ValueError("eps must lie in (0, 4/9)")
    if np.any(s < 0) or np.any(s > t) or np.any(t > eps):
        raise ValueError("need 0 <= s <= t <= eps")
    a = 1.0 + eps - s
    b = 1.0 - eps + t
    cos_psi = (4.0 - a * a - b * b) / (2.0 * a * b)
    out = np.arccos(np.clip(cos_psi, -1.0, 1.0))
    out = np.where(np.isclose(s, t, rtol=0.0, atol=0.0), 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstantsTable:
    n: int
    C0: float
    C: float
    omega_prev: float
    sphere_area: float


def constant_C(n: int) -> ConstantsTable:
    """Explicit constants: C0 = 181 n^3 / (2 - 2^{(n-1)/n})^{3/2}, C = C0 + 1."""
    n = check_dimension(n)
    c0 = 181.0 * n**3 / (2.0 - 2.0 ** ((n - 1) / n)) ** 1.5
    return ConstantsTable(
        n=n,
        C0=c0,
        C=c0 + 1.0,
        omega_prev=unit_ball_volume(n - 1),
        sphere_area=sphere_area(n),
    )
