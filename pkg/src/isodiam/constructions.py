"""Nearly optimal sets for the isodiametric inequality, and Reuleaux polygons.

The sets are built as profiles from a pair (f, g) on [0, eps]: a bump of cap
angle f(t) on the sphere of radius 1 + eps - t around the pole p, and a notch
of cap angle g(t) on the sphere of radius 1 - eps + t around -p.  Choosing g
as the envelope g(t) = max_s f(s) + pi sqrt(t - s) keeps the diameter at 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ._planar import polygon_diameter
from .geomcore import cap_area, check_dimension
from .profiles import MIN_NODES, ProfileError, RadialProfile

EPS_MAX = 4.0 / 9.0
F_MAX = math.pi / 8.0

_GL8 = np.polynomial.legendre.leggauss(8)


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Sampled:
    """Piecewise-linear function on a non-decreasing grid; repeated abscissae mark jumps."""

    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        y = np.array(self.y, dtype=float)
        if t.ndim != 1 or t.size == 0 or t.size != y.size:
            raise ConstructionError("sampled function needs matching non-empty grids")
        if np.any(np.diff(t) < 0):
            raise ConstructionError("abscissae must be non-decreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __call__(self, x) -> np.ndarray:
        """Upper semicontinuous evaluation (max of one-sided limits at jumps)."""
        x = np.asarray(x, dtype=float)
        t, y = self.t, self.y
        hi = np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 1)
        lo = np.clip(np.searchsorted(t, x, side="left"), 0, t.size - 1)
        a = np.clip(hi, 0, t.size - 2) if t.size > 1 else hi
        b = np.minimum(a + 1, t.size - 1)
        width = t[b] - t[a]
        w = np.where(width > 0, (x - t[a]) / np.where(width > 0, width, 1.0), 1.0)
        lin = y[a] + np.clip(w, 0.0, 1.0) * (y[b] - y[a])
        exact = t[lo] == x
        return np.where(exact, np.maximum(lin, np.maximum(y[lo], y[hi])), lin)

    def integral(self, h: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
        """int h(y(t)) dt over the grid (Gauss-Legendre, 8 points per cell)."""
        t, y = self.t, self.y
        keep = np.diff(t) > 0
        a, b = t[:-1][keep], t[1:][keep]
        ya, yb = y[:-1][keep], y[1:][keep]
        x, w = _GL8
        u = 0.5 * (x + 1.0)
        yy = ya[:, None] + (yb - ya)[:, None] * u
        vals = yy if h is None else h(yy)
        return float(np.sum(0.5 * (b - a) * (vals @ w)))


def t_grid(eps: float, cells: int = 1024, h0: float = 1e-12, ratio: float = 1.6,
           breaks=()) -> np.ndarray:
    """Grid on [0, eps]: geometric cells from h0 near t = 0, then uniform cells."""
    h = eps / cells
    geo = [0.0]
    step = h0
    while geo[-1] + step < h:
        geo.append(geo[-1] + step)
        step *= ratio
    pts = np.concatenate([geo, np.linspace(h, eps, cells)])
    extra = np.asarray([b for b in breaks if 0.0 < b < eps], dtype=float)
    return np.unique(np.concatenate([pts, extra]))


def envelope_g(f: Sampled, eps: float | None = None) -> tuple[Sampled, np.ndarray]:
    """g(t) = max_{0<=s<=t} f(s) + pi sqrt(t - s) for piecewise-linear f.

    The maximum over each linear piece of f is found in closed form (interior
    stationary point plus the piece's end points), so the envelope is exact for
    the sampled f.  Returns g on the distinct abscissae of f and the maximiser
    s(t).
    """
    if f.t.size == 0:
        raise ConstructionError("empty grid")
    if eps is not None and f.t[-1] > eps * (1 + 1e-12):
        raise ConstructionError("f sampled beyond eps")
    tq = np.unique(f.t)
    g = np.full(tq.size, -np.inf)
    s_arg = np.zeros(tq.size)
    # node candidates (includes every value at repeated abscissae)
    for k0 in range(0, tq.size, 256):
        tt = tq[k0:k0 + 256, None]
        gap = tt - f.t[None, :]
        val = np.where(gap >= 0, f.y[None, :] + math.pi * np.sqrt(np.maximum(gap, 0.0)), -np.inf)
        j = np.argmax(val, axis=1)
        g[k0:k0 + 256] = val[np.arange(tt.shape[0]), j]
        s_arg[k0:k0 + 256] = f.t[j]
    # interior stationary points of each linear piece: slope = pi / (2 sqrt(t - s))
    keep = np.diff(f.t) > 0
    a, b = f.t[:-1][keep], f.t[1:][keep]
    ya, yb = f.y[:-1][keep], f.y[1:][keep]
    slope = (yb - ya) / (b - a)
    pos = slope > 0
    a, b, ya, slope = a[pos], b[pos], ya[pos], slope[pos]
    if a.size:
        offset = (math.pi / (2.0 * slope)) ** 2
        for k0 in range(0, tq.size, 256):
            tt = tq[k0:k0 + 256, None]
            s = tt - offset[None, :]
            ok = (s > a[None, :]) & (s < np.minimum(b[None, :], tt))
            val = np.where(ok, ya[None, :] + slope[None, :] * (s - a[None, :])
                           + math.pi * np.sqrt(np.maximum(tt - s, 0.0)), -np.inf)
            j = np.argmax(val, axis=1)
            best = val[np.arange(tt.shape[0]), j]
            better = best > g[k0:k0 + 256]
            g[k0:k0 + 256] = np.where(better, best, g[k0:k0 + 256])
            s_arg[k0:k0 + 256] = np.where(better, s[np.arange(tt.shape[0]), j], s_arg[k0:k0 + 256])
    return Sampled(tq, g), s_arg


@dataclass(eq=False)
class CapFunctionPair:
    eps: float
    f: Sampled
    g: Sampled
    n: int
    s_star: np.ndarray | None = None
    family_params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.n = check_dimension(self.n)
        if not 0.0 < self.eps < EPS_MAX:
            raise ConstructionError("eps must lie in (0, 4/9)")
        # f reaches pi/8 at the closed end point t = eps for the planar family
        if np.max(self.f.y) > F_MAX or np.min(self.f.y) < 0:
            raise ConstructionError("f must take values in [0, pi/8]")
        if np.min(self.g.y) < 0 or np.max(self.g.y) > math.pi:
            raise ConstructionError("g must take values in [0, pi]")
        if abs(self.f.t[-1] - self.eps) > 1e-12 * self.eps or abs(self.g.t[-1] - self.eps) > 1e-12 * self.eps:
            raise ConstructionError("f and g must be sampled on [0, eps]")

    def check_invariants(self, tol: float = 1e-12) -> dict[str, float]:
        """Worst violations of g >= f, monotone g and g >= pi sqrt(t) - sup f."""
        gf = self.g(self.f.t) - self.f.y
        mono = np.diff(self.g.y)
        low = self.g.y - (math.pi * np.sqrt(self.g.t) - np.max(self.f.y))
        return {
            "g_minus_f_min": float(np.min(gf)),
            "g_increment_min": float(np.min(mono)) if mono.size else 0.0,
            "envelope_lower_min": float(np.min(low)),
        }


def build_E(pair: CapFunctionPair, inner_nodes: int = 128) -> RadialProfile:
    """Profile of E[eps, f, g, p] with p the profile axis."""
    eps = pair.eps
    if np.max(pair.f.y) > F_MAX or not eps < EPS_MAX:
        raise ConstructionError("pair violates f <= pi/8 or eps < 4/9")
    g_t, g_y = pair.g.t, pair.g.y
    f_t, f_y = pair.f.t, pair.f.y
    r_in = np.linspace(0.0, 1.0 - eps, max(inner_nodes, MIN_NODES))
    v_in = np.full(r_in.size, math.pi)
    r_notch = (1.0 - eps) + g_t
    r_notch[0], r_notch[-1] = 1.0 - eps, 1.0
    v_notch = math.pi - g_y
    r_bump = (1.0 + eps) - f_t[::-1]
    r_bump[0], r_bump[-1] = 1.0, 1.0 + eps
    v_bump = f_y[::-1]
    r = np.concatenate([r_in, r_notch, r_bump])
    v = np.concatenate([v_in, v_notch, v_bump])
    # collapse duplicates that carry no jump (keeps each radius at most twice)
    keep = np.ones(r.size, dtype=bool)
    same = (np.diff(r) == 0) & (np.diff(v) == 0)
    keep[1:][same] = False
    r, v = r[keep], v[keep]
    meta = {"kind": "construction", "eps": eps, **{k: v_ for k, v_ in pair.family_params.items()}}
    return RadialProfile(pair.n, r, np.clip(v, 0.0, math.pi), meta)


def deficit_upper_bound(pair: CapFunctionPair, vol: float) -> float:
    """(1/|E|) int_0^eps cap(g) - cap(f) dt."""
    if not vol > 0:
        raise ConstructionError("volume must be positive")
    cap = lambda a: cap_area(pair.n, np.clip(a, 0.0, math.pi))
    return (pair.g.integral(cap) - pair.f.integral(cap)) / vol


def integral_branch(pair: CapFunctionPair) -> float:
    """int_{eps/2}^{eps} cap(f(t)) dt."""
    t = pair.f.t
    half = 0.5 * pair.eps
    grid = np.unique(np.concatenate([[half], t[t >= half]]))
    sub = Sampled(grid, pair.f(grid))
    return sub.integral(lambda a: cap_area(pair.n, np.clip(a, 0.0, math.pi)))


# ---------------------------------------------------------------------------
# families


def family_n2(eps: float, cells: int = 1024) -> CapFunctionPair:
    """f(t) = pi t / (8 eps) in the plane; the envelope is pi sqrt(t) up to 16 eps^2."""
    if not 0.0 < eps <= 1.0 / 16.0:
        raise ConstructionError("n2 family needs 0 < eps <= 1/16")
    t = t_grid(eps, cells, breaks=(16.0 * eps * eps,))
    f = Sampled(t, math.pi * t / (8.0 * eps))
    g, s = envelope_g(f, eps)
    return CapFunctionPair(eps, f, g, 2, s, {"family": "n2"})


def family_high_n(eps: float, rho: float, n: int = 4, cells: int = 1024) -> CapFunctionPair:
    """f(0) = rho and f = 0 on (0, eps]; then g(t) = rho + pi sqrt(t)."""
    if not 0.0 < eps < EPS_MAX:
        raise ConstructionError("eps must lie in (0, 4/9)")
    if not 0.0 < rho < F_MAX:
        raise ConstructionError("rho must lie in (0, pi/8)")
    t = t_grid(eps, cells)
    tt = np.concatenate([[0.0], t])
    yy = np.zeros(tt.size)
    yy[0] = rho
    f = Sampled(tt, yy)
    g, s = envelope_g(f, eps)
    return CapFunctionPair(eps, f, g, n, s, {"family": "high", "rho": rho, "n": n})


def n3_tilde(eps: float, c: float) -> Callable[[np.ndarray], np.ndarray]:
    l = abs(math.log(eps))
    return lambda t: c * (np.asarray(t, dtype=float) / eps) ** l


def _check_n3(eps: float, c: float, theta: float):
    if not 0.0 < eps < math.exp(-2.0):
        raise ConstructionError("n3 family needs 0 < eps < e^-2")
    if not 0.0 < c < F_MAX:
        raise ConstructionError("n3 family needs 0 < c < pi/8")
    if not math.exp(-0.5) < theta < 1.0:
        raise ConstructionError("n3 family needs e^-1/2 < theta < 1")


def family_n3(eps: float, c: float = math.pi / 16.0, theta: float = 0.7,
              cells: int = 1024) -> CapFunctionPair:
    """Shifted logarithmic family: f(t) = c ((t + theta eps) / eps)^|log eps| on [0, (1 - theta) eps].

    The returned pair lives on [0, (1 - theta) eps]; ``family_params['eps_tilde']``
    keeps the unshifted eps, which is the scale the rate is measured in.
    """
    _check_n3(eps, c, theta)
    ft = n3_tilde(eps, c)
    e1 = (1.0 - theta) * eps
    t = t_grid(e1, cells)
    t[-1] = e1
    f = Sampled(t, ft(t + theta * eps))
    g, s = envelope_g(f, e1)
    params = {"family": "n3", "c": c, "theta": theta, "eps_tilde": eps, "l": abs(math.log(eps))}
    return CapFunctionPair(e1, f, g, 3, s, params)


def n3_diagnostics(eps: float, c: float = math.pi / 16.0, theta: float = 0.7,
                   cells: int = 2048) -> dict[str, float]:
    """Properties of the unshifted n = 3 pair and its shifted version.

    ``half_ratio_min`` is min of f~/g~ over [theta eps, eps] (at least 1/2 means
    f~ >= g~/2 holds there); ``shift_excess_max`` is max of
    g_shifted(t) - g~(t + theta eps), which should be <= 0.
    """
    _check_n3(eps, c, theta)
    ft = n3_tilde(eps, c)
    t = t_grid(eps, cells, breaks=(theta * eps,))
    tilde_f = Sampled(t, ft(t))
    tilde_g, s_star = envelope_g(tilde_f, eps)
    mask = tilde_g.t >= theta * eps
    ratio = tilde_f(tilde_g.t[mask]) / tilde_g.y[mask]
    pair = family_n3(eps, c, theta, cells)
    shifted = pair.g.y - tilde_g(pair.g.t + theta * eps)
    return {
        "half_ratio_min": float(np.min(ratio)),
        "shift_excess_max": float(np.max(shifted)),
        "s_star_at_theta_eps": float(np.interp(theta * eps, tilde_g.t, s_star)),
    }


def ball_minus_ball(n: int, r: float, offset: float, nodes: int = 4096) -> RadialProfile:
    """Profile of the unit ball with the ball B_r(x) removed, |x| = offset.

    The profile axis is -x/|x|, so the hole sits around the negative pole.
    """
    n = check_dimension(n)
    if not (0.0 < r and 0.0 <= offset and r < 1.0 - offset):
        raise ConstructionError("need 0 < r < 1 - offset (hole strictly inside)")
    x = float(offset)
    if x == 0.0:
        r_lo = np.linspace(0.0, r, nodes // 2)
        r_hi = np.linspace(r, 1.0, nodes // 2)
        rr = np.concatenate([r_lo, r_hi])
        vv = np.concatenate([np.zeros(r_lo.size), np.full(r_hi.size, math.pi)])
        return RadialProfile(n, rr, vv, {"kind": "ballminus", "r": r, "x": x})
    a, b = abs(x - r), x + r
    k = nodes // 2
    hole = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.linspace(0.0, math.pi, k))
    outside = np.linspace(0.0, 1.0, nodes - k)
    rr = np.unique(np.concatenate([hole, outside, [a, b]]))
    with np.errstate(divide="ignore", invalid="ignore"):
        cb = (rr * rr + x * x - r * r) / (2.0 * rr * x)
    beta = np.where(rr > 0, np.arccos(np.clip(cb, -1.0, 1.0)), 0.0)
    in_hole = (rr > a) & (rr < b)
    vv = np.where(in_hole, math.pi - beta, math.pi)
    if r > x:
        vv = np.where(rr <= a, 0.0, vv)
    return RadialProfile(n, rr, vv, {"kind": "ballminus", "r": r, "x": x})


# ---------------------------------------------------------------------------
# Reuleaux polygons


@dataclass(frozen=True, eq=False)
class ReuleauxShape:
    k: int
    d: float
    vertices: np.ndarray
    arcs: tuple  # (center, start_angle, end_angle), counter-clockwise

    def perimeter(self) -> float:
        return float(sum(self.d * (e - s) for _, s, e in self.arcs))

    def boundary(self, m: int = 4096) -> np.ndarray:
        """m points along the boundary, counter-clockwise, vertices included."""
        per = max(1, m // self.k)
        pts = []
        for c, s, e in self.arcs:
            th = np.linspace(s, e, per, endpoint=False)
            pts.append(c + self.d * np.stack([np.cos(th), np.sin(th)], axis=1))
        return np.concatenate(pts)

    def support(self, theta) -> np.ndarray:
        """Support function h(u) for u = (cos theta, sin theta)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        best = np.full(theta.size, -np.inf)
        for c, s, e in self.arcs:
            rel = np.mod(theta - s, 2 * math.pi)
            inside = rel <= (e - s)
            ends = np.stack([c + self.d * np.array([math.cos(s), math.sin(s)]),
                             c + self.d * np.array([math.cos(e), math.sin(e)])])
            val = np.where(inside, u @ c + self.d, np.max(u @ ends.T, axis=1))
            best = np.maximum(best, val)
        return best

    def width(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.support(theta) + self.support(theta + math.pi)

    def diameter(self, samples: int = 10_000) -> float:
        return polygon_diameter(self.boundary(samples))


def reuleaux(k: int, d: float) -> ReuleauxShape:
    """Regular Reuleaux k-gon of width d: each arc is centred at a vertex and joins the two opposite vertices."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 3 or k % 2 == 0:
        raise ConstructionError("k must be an odd integer >= 3")
    if not d > 0:
        raise ConstructionError("d must be positive")
    k = int(k)
    R = d / (2.0 * math.cos(math.pi / (2 * k)))
    ang = math.pi / 2 + 2 * math.pi * np.arange(k) / k
    verts = R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    arcs = []
    h = (k - 1) // 2
    for i in range(k):
        c = verts[i]
        p, q = verts[(i + h) % k], verts[(i + h + 1) % k]
        s = math.atan2(p[1] - c[1], p[0] - c[0])
        e = math.atan2(q[1] - c[1], q[0] - c[0])
        if e < s:
            e += 2 * math.pi
        arcs.append((c.copy(), s, e))
    # order arcs counter-clockwise by the angle of their midpoints
    mids = [math.atan2(*(c + d * np.array([math.cos(0.5 * (s + e)), math.sin(0.5 * (s + e))]))[::-1])
            for c, s, e in arcs]
    arcs = [arcs[i] for i in np.argsort(mids)]
    return ReuleauxShape(k, float(d), verts, tuple(arcs))
