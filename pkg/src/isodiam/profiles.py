"""Axially symmetric sets described by a cap-angle function.

A profile stores nodes ``0 = r_0 <= r_1 <= ... <= r_N = r_max`` and angles
``v_i`` in [0, pi]; between distinct nodes ``v`` is linear.  A radius may
appear twice, which encodes a jump of ``v`` at that radius.  The represented
set is ``{q : angle(q, e) < v(|q|)}`` where the axis ``e`` is the last
coordinate direction.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from ._optim import golden_max_batch, golden_min, golden_min_batch
from .geomcore import _cap_area_abs, cap_area, check_dimension, chord, constant_C, sphere_area, unit_ball_volume

log = logging.getLogger(__name__)

MIN_NODES = 64
ANGLE_SLACK = 1e-12

_GL = {k: np.polynomial.legendre.leggauss(k) for k in (2, 4, 8)}


class ProfileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RadialProfile:
    n: int
    r: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = check_dimension(self.n)
        r = np.array(self.r, dtype=float).ravel()
        v = np.array(self.v, dtype=float).ravel()
        if r.size != v.size:
            raise ProfileError("r and v must have the same length")
        if r.size < MIN_NODES:
            raise ProfileError(f"profile needs at least {MIN_NODES} nodes, got {r.size}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise ProfileError("non-finite profile data")
        if r[0] != 0.0:
            raise ProfileError("profile grid must start at r = 0")
        dr = np.diff(r)
        if np.any(dr < 0):
            raise ProfileError("profile grid must be non-decreasing")
        if np.any((dr[:-1] == 0) & (dr[1:] == 0)):
            raise ProfileError("a radius may appear at most twice")
        if r[-1] <= 0:
            raise ProfileError("r_max must be positive")
        if np.any(v < -ANGLE_SLACK) or np.any(v > math.pi + ANGLE_SLACK):
            raise ProfileError("cap angles must lie in [0, pi]")
        v = np.clip(v, 0.0, math.pi)
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def grid(self) -> np.ndarray:
        return self.r

    def __len__(self) -> int:
        return self.r.size

    def scaled(self, lam: float) -> "RadialProfile":
        if not lam > 0:
            raise ProfileError("scale factor must be positive")
        out = RadialProfile(self.n, self.r * lam, self.v, dict(self.meta))
        d = self.__dict__.get("_diameter")
        if d is not None:
            # the diameter search is scale-equivariant
            object.__setattr__(out, "_diameter", lam * d)
        return out

    def value(self, x) -> np.ndarray:
        """v at radii x (right-continuous at jumps, closure value at r_max, 0 beyond)."""
        x = np.asarray(x, dtype=float)
        r, v = self.r, self.v
        idx = np.clip(np.searchsorted(r, x, side="right") - 1, 0, r.size - 2)
        r0, r1 = r[idx], r[idx + 1]
        v0, v1 = v[idx], v[idx + 1]
        width = r1 - r0
        w = np.where(width > 0, (x - r0) / np.where(width > 0, width, 1.0), 1.0)
        out = v0 + np.clip(w, 0.0, 1.0) * (v1 - v0)
        at_end = x == r[-1]
        if np.any(at_end):
            out = np.where(at_end, max(v[-1], v[-2] if r[-2] == r[-1] else v[-1]), out)
        return np.where(x > r[-1], 0.0, out)

    def contains(self, points) -> np.ndarray:
        """Membership of points (shape (m, n)) in the open profile set."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.n:
            raise ValueError(f"points must have {self.n} coordinates")
        rad = np.linalg.norm(pts, axis=1)
        safe = np.where(rad > 0, rad, 1.0)
        ang = np.arccos(np.clip(pts[:, -1] / safe, -1.0, 1.0))
        val = self.value(rad)
        # v = pi is the whole sphere, including the point opposite the pole
        inside = (rad <= self.r_max) & ((ang < val) | (val >= math.pi))
        return np.where(rad > 0, inside, self.v[0] > 0)

    def to_json(self) -> str:
        doc = {"n": self.n, "r_grid": self.r.tolist(), "v": self.v.tolist()}
        if self.meta:
            doc["meta"] = self.meta
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RadialProfile":
        try:
            doc = json.loads(text)
            return cls(int(doc["n"]), doc["r_grid"], doc["v"], dict(doc.get("meta", {})))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ProfileError(f"malformed profile document: {exc}") from exc


# ---------------------------------------------------------------------------
# constructors


def ball_profile(n: int, radius: float = 1.0, nodes: int = MIN_NODES) -> RadialProfile:
    r = np.linspace(0.0, radius, nodes)
    return RadialProfile(n, r, np.full(nodes, math.pi), {"kind": "ball"})


def profile_from_function(n: int, r_max: float, func, nodes: int = 4096,
                          breaks=()) -> RadialProfile:
    """Sample v = func(r) on a uniform grid with the given breakpoints added."""
    r = np.union1d(np.linspace(0.0, r_max, nodes), np.asarray(breaks, dtype=float))
    r = r[(r >= 0) & (r <= r_max)]
    return RadialProfile(n, r, np.clip(func(r), 0.0, math.pi))


def random_profile(n: int, rng: np.random.Generator, nodes: int = 128) -> RadialProfile:
    """Seeded random profile normalised to diameter 2.

    v is a piecewise-linear interpolant through 3 to 10 random knots; with
    probability 1/4 the set is hollowed near the origin and with probability
    1/4 it is truncated before r = 1.
    """
    k = int(rng.integers(3, 11))
    knots_r = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0.0, 1.0, k - 2)]))
    knots_v = rng.uniform(0.0, math.pi, k)
    knots_v[rng.uniform(size=k) < 0.15] = math.pi
    r = np.linspace(0.0, 1.0, nodes)
    v = np.interp(r, knots_r, knots_v)
    if rng.uniform() < 0.25:
        v[r < rng.uniform(0.05, 0.4)] = 0.0
    if rng.uniform() < 0.25:
        v[r > rng.uniform(0.7, 0.95)] = 0.0
    if not np.any(v > 0):
        v[:] = math.pi
    prof = RadialProfile(n, r, v, {"kind": "random"})
    return prof.scaled(2.0 / diameter(prof))


# ---------------------------------------------------------------------------
# quadrature helpers


def _cells(P: RadialProfile):
    r, v = P.r, P.v
    keep = np.diff(r) > 0
    return r[:-1][keep], r[1:][keep], v[:-1][keep], v[1:][keep]


def volume(P: RadialProfile) -> float:
    """|E| = int r^(n-1) cap_area(n, v(r)) dr, Gauss-Legendre (8 points) per cell."""
    r0, r1, v0, v1 = _cells(P)
    x, w = _GL[8]
    u = 0.5 * (x + 1.0)
    rr = r0[:, None] + (r1 - r0)[:, None] * u
    vv = v0[:, None] + (v1 - v0)[:, None] * u
    vals = rr ** (P.n - 1) * cap_area(P.n, np.clip(vv, 0.0, math.pi))
    return float(np.sum(0.5 * (r1 - r0) * (vals @ w)))


def _require_volume(P: RadialProfile) -> float:
    vol = volume(P)
    if not vol > 0:
        raise ProfileError("profile has zero volume")
    return vol


# ---------------------------------------------------------------------------
# diameter


def _support_nodes(P: RadialProfile) -> np.ndarray:
    """Indices of nodes whose points belong to the closure of the set."""
    pos = P.v > 0
    keep = pos.copy()
    keep[:-1] |= pos[1:]
    keep[1:] |= pos[:-1]
    return np.flatnonzero(keep)


def _pair_value(r1, v1, r2, v2):
    # chord(r1, r2, min(v1 + v2, pi)) without argument checks, for the hot loops
    th = np.minimum(v1 + v2, math.pi)
    return np.sqrt((r1 - r2) ** 2 + 4.0 * r1 * r2 * np.sin(0.5 * th) ** 2)


def _local_linear(P: RadialProfile, i: np.ndarray):
    """For node indices i: search interval [lo, hi] and a cell-local evaluator."""
    r, v = P.r, P.v
    last = r.size - 1
    im = np.maximum(i - 1, 0)
    ip = np.minimum(i + 1, last)
    has_left = (i > 0) & (r[im] < r[i])
    has_right = (i < last) & (r[ip] > r[i])
    lo = np.where(has_left, r[im], r[i])
    hi = np.where(has_right, r[ip], r[i])
    ri, vi = r[i], v[i]
    sl = np.where(has_left, (vi - v[im]) / np.where(has_left, ri - r[im], 1.0), 0.0)
    sr = np.where(has_right, (v[ip] - vi) / np.where(has_right, r[ip] - ri, 1.0), 0.0)

    def ev(x):
        d = x - ri
        return vi + np.where(d < 0, sl, sr) * d

    return lo, hi, ev


def diameter(P: RadialProfile, top: int = 8, polish: bool = True) -> float:
    """Diameter via the meridian reduction, node search then golden polish.

    Profiles are immutable, so the default search is memoised on the instance.
    """
    memo = top == 8 and polish
    if memo and "_diameter" in P.__dict__:
        return P.__dict__["_diameter"]
    d = _diameter_search(P, top, polish)
    if memo:
        object.__setattr__(P, "_diameter", d)
    return d


def _diameter_search(P: RadialProfile, top: int, polish: bool) -> float:
    idx = _support_nodes(P)
    if idx.size == 0:
        return 0.0
    rs, vs = P.r[idx], P.v[idx]
    lower = float(np.max(_pair_value(rs, vs, rs, vs)))
    keep = rs + rs.max() >= lower * (1.0 - 1e-12)
    idx, rs, vs = idx[keep], rs[keep], vs[keep]
    best_vals = np.empty(0)
    best_pairs = np.empty((0, 2), dtype=int)
    chunk = max(1, 4_000_000 // max(rs.size, 1))
    for start in range(0, rs.size, chunk):
        sl = slice(start, start + chunk)
        mat = _pair_value(rs[sl, None], vs[sl, None], rs[None, :], vs[None, :])
        flat = mat.ravel()
        k = min(top, flat.size)
        part = np.argpartition(-flat, k - 1)[:k]
        ii, jj = np.unravel_index(part, mat.shape)
        best_vals = np.concatenate([best_vals, flat[part]])
        best_pairs = np.concatenate([best_pairs, np.stack([idx[sl][ii], idx[jj]], axis=1)])
    order = np.argsort(-best_vals, kind="stable")[:top]
    best_vals, best_pairs = best_vals[order], best_pairs[order]
    grid_best = float(best_vals[0])
    if not polish:
        return grid_best

    i, j = best_pairs[:, 0], best_pairs[:, 1]
    lo1, hi1, ev1 = _local_linear(P, i)
    lo2, hi2, ev2 = _local_linear(P, j)
    x1, x2 = P.r[i].astype(float), P.r[j].astype(float)
    val = best_vals.copy()
    for _ in range(2):
        x1, val1 = golden_max_batch(lambda x: _pair_value(x, ev1(x), x2, ev2(x2)), lo1, hi1, 28)
        x2, val = golden_max_batch(lambda x: _pair_value(x1, ev1(x1), x, ev2(x)), lo2, hi2, 28)
    return max(grid_best, float(np.max(val)))


def isodiametric_deficit(P: RadialProfile, diam: float | None = None, vol: float | None = None) -> float:
    """delta = (diam/2)^n |B| / |E| - 1."""
    vol = _require_volume(P) if vol is None else vol
    if not vol > 0:
        raise ProfileError("profile has zero volume")
    diam = diameter(P) if diam is None else diam
    return (0.5 * diam) ** P.n * unit_ball_volume(P.n) / vol - 1.0


# ---------------------------------------------------------------------------
# symmetric difference with balls centred on the axis


def _ball_cap(r, t):
    """Cap angle of B(t e) on the sphere of radius r (around sign(t) e)."""
    r = np.asarray(r, dtype=float)
    at = np.abs(np.asarray(t, dtype=float))
    den = 2.0 * r * at
    # den = 0 is masked below; the floor only keeps the division finite
    c = (r * r + at * at - 1.0) / np.maximum(den, 1e-300)
    beta = np.arccos(np.minimum(np.maximum(c, -1.0), 1.0))
    return np.where(den > 0, beta, np.where(r < 1.0, math.pi, 0.0))


def _sphere_symdiff(n: int, v, r, t):
    """Per-sphere measure of K[e, v] symmetric-difference the slice of B(t e).

    v must already lie in [0, pi] (profile values are clipped on construction).
    """
    cb = _cap_area_abs(n, _ball_cap(r, t))
    cv = _cap_area_abs(n, np.asarray(v, dtype=float))
    return _combine_symdiff(n, cv, cb, t)


def _combine_symdiff(n: int, cv, cb, t):
    if np.ndim(t) == 0:
        if t >= 0:
            return np.abs(cv - cb)
        return cv + cb - 2.0 * np.maximum(0.0, cv + cb - sphere_area(n))
    same = np.abs(cv - cb)
    opposite = cv + cb - 2.0 * np.maximum(0.0, cv + cb - sphere_area(n))
    return np.where(np.asarray(t) >= 0, same, opposite)


def _sqrt_kinks(ts: np.ndarray) -> np.ndarray:
    # radii where the cap angle of B(t e) has a square-root singularity
    at = np.abs(ts)
    return np.concatenate([np.abs(1.0 - at), 1.0 + at])


def _accurate_mesh(P: RadialProfile, ts):
    """Quadrature mesh containing every breakpoint of the integrand for t in ts."""
    at = np.abs(np.atleast_1d(np.asarray(ts, dtype=float)))
    top = max(P.r_max, 1.0 + float(np.max(at)))
    kinks = _sqrt_kinks(at)
    kinks = kinks[(kinks > 0.0) & (kinks <= top)]
    pts = np.unique(np.concatenate([P.r, [top], np.linspace(0.0, top, 65), kinks]))
    return pts[pts <= top], kinks


def _kink_rule(a: np.ndarray, b: np.ndarray, kinks: np.ndarray, order: int):
    """Nodes and weights per cell; a cell ending at a kink r0 uses r = r0 +- h s^2.

    Cells with a kink at both ends are split at the midpoint first.
    """
    ka, kb = np.isin(a, kinks), np.isin(b, kinks)
    both = ka & kb
    if np.any(both):
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid[both]]), np.concatenate([np.where(both, mid, b), b[both]])
        ka = np.concatenate([ka, np.zeros(mid[both].size, dtype=bool)])
        kb = np.concatenate([kb & ~both, np.ones(mid[both].size, dtype=bool)])
    x, w = _GL[order]
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    h = (b - a)[:, None]
    at_a = ka[:, None]
    at_b = (kb & ~ka)[:, None]
    sq = h * (s * s)
    rr = np.where(at_a, a[:, None] + sq, np.where(at_b, b[:, None] - sq, a[:, None] + h * s))
    ww = np.where(at_a | at_b, 2.0 * h * s * ws, h * ws)
    return rr.ravel(), ww.ravel()


def _cell_lines(P: RadialProfile, a: np.ndarray, b: np.ndarray):
    """v(a+) and slope of the linear piece of v on each mesh cell [a, b]."""
    i = np.clip(np.searchsorted(P.r, a, side="right") - 1, 0, P.r.size - 2)
    dr = P.r[i + 1] - P.r[i]
    slope = np.divide(P.v[i + 1] - P.v[i], dr, out=np.zeros_like(dr), where=dr > 0)
    va = P.v[i] + slope * (a - P.r[i])
    outside = a >= P.r_max
    return np.where(outside, 0.0, va), np.where(outside, 0.0, slope)


def _crossings(P: RadialProfile, mesh: np.ndarray, ts: np.ndarray, steps: int = 8) -> np.ndarray:
    """Radii inside mesh cells where the per-sphere integrand has a kink.

    For t >= 0 the integrand |cap(v) - cap(beta)| kinks where v = beta; for
    t < 0 the overlap term kinks where v = pi - beta.  Illinois regula falsi
    per bracketing cell; a kink misplaced by e only costs O(e^2) in the
    integral, so 1e-9 is ample.
    """
    a, b = mesh[:-1], mesh[1:]
    va, sl = _cell_lines(P, a, b)
    sign = np.where(ts >= 0, 1.0, -1.0)[:, None]
    shift = np.where(ts >= 0, 0.0, math.pi)[:, None]
    gm = -shift - sign * _ball_cap(mesh[None, :], ts[:, None])
    ga = va[None, :] + gm[:, :-1]
    gb = (va + sl * (b - a))[None, :] + gm[:, 1:]
    kk, cc = np.nonzero(ga * gb < 0)
    if kk.size == 0:
        return np.empty(0)
    sgn, sh, tk = sign[kk, 0], shift[kk, 0], ts[kk]
    vc, sc, ac = va[cc], sl[cc], a[cc]
    x0, x1 = ac.copy(), b[cc].copy()
    f0, f1 = ga[kk, cc], gb[kk, cc]
    for _ in range(steps):
        x = x1 - f1 * (x1 - x0) / (f1 - f0)
        fx = vc + sc * (x - ac) - sh - sgn * _ball_cap(x, tk)
        flip = fx * f1 < 0
        # keep the bracket [x0, x1]; halve the stale end's value (Illinois)
        x0, f0 = np.where(flip, x1, x0), np.where(flip, f1, 0.5 * f0)
        step = np.abs(x - x1)
        x1, f1 = x, fx
        if np.all((fx == 0) | (step < 1e-9)):
            break
    return x1


def _symdiff_many(P: RadialProfile, ts: np.ndarray, order: int = 8) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    mesh, kinks = _accurate_mesh(P, ts)
    mesh = np.unique(np.concatenate([mesh, _crossings(P, mesh, ts)]))
    rr, ww = _kink_rule(mesh[:-1], mesh[1:], kinks, order)
    ww = ww * rr ** (P.n - 1)
    cv = _cap_area_abs(P.n, P.value(rr))[None, :]
    tt = ts[:, None]
    cb = _cap_area_abs(P.n, _ball_cap(rr[None, :], tt))
    return _combine_symdiff(P.n, cv, cb, tt) @ ww


def symdiff_axis_ball(P: RadialProfile, t: float) -> float:
    """|E symmetric-difference B(t e)| by per-sphere cap measures."""
    t = float(t)
    if not abs(t) < 1.0 + P.r_max:
        raise ProfileError("axis centre out of range")
    return float(_symdiff_many(P, np.array([t]))[0])


def _scan_symdiff(P: RadialProfile, ts: np.ndarray) -> np.ndarray:
    top = 1.0 + float(np.max(np.abs(ts)))
    mesh = np.unique(np.concatenate([np.unique(P.r), np.linspace(0.0, max(top, P.r_max), 129)]))
    x, w = _GL[2]
    a, b = mesh[:-1], mesh[1:]
    rr = (a[:, None] + 0.5 * (b - a)[:, None] * (x + 1.0)).ravel()
    ww = (0.5 * (b - a)[:, None] * w).ravel() * rr ** (P.n - 1)
    cv = _cap_area_abs(P.n, P.value(rr))[None, :]
    out = np.empty(ts.size)
    for k0 in range(0, ts.size, 64):
        tt = ts[k0:k0 + 64, None]
        cb = _cap_area_abs(P.n, _ball_cap(rr[None, :], tt))
        out[k0:k0 + 64] = _combine_symdiff(P.n, cv, cb, tt) @ ww
    return out


def best_symdiff(P: RadialProfile, coarse: int = 257, candidates: int = 3,
                 tol: float = 1e-5) -> tuple[float, float]:
    """min over axis centres t of |E symmetric-difference B(t e)|; returns (t, value).

    A coarse scan on a fixed mesh picks the best `candidates` local minima
    among its nodes; each is refined on [t_{k-1}, t_{k+1}] by golden section,
    all brackets stepping together so that one quadrature mesh serves every
    candidate.  Since |B(t e) symmetric-difference B(s e)| <= 2 |B^{n-1}| |t - s|,
    a bracket whose node value exceeds the best node value by more than that
    bound times its half-width cannot hold the minimum and is skipped.
    """
    span = 1.0 + P.r_max
    ts = np.linspace(-span, span, coarse)
    ts[coarse // 2] = 0.0
    scan = _scan_symdiff(P, ts)
    padded = np.concatenate([[np.inf], scan, [np.inf]])
    local = np.flatnonzero((scan <= padded[:-2]) & (scan <= padded[2:]))
    order = local[np.argsort(scan[local], kind="stable")]
    chosen: list[int] = []
    for k in order:
        if all(abs(k - c) > 1 for c in chosen):
            chosen.append(int(k))
        if len(chosen) == candidates:
            break
    idx = np.array(chosen)
    lo = np.maximum(ts[np.maximum(idx - 1, 0)], -span + 1e-12)
    hi = np.minimum(ts[np.minimum(idx + 1, coarse - 1)], span - 1e-12)
    nodes = np.clip(ts[idx], lo, hi)
    node_vals = _symdiff_many(P, nodes)
    lip = 2.0 * unit_ball_volume(P.n - 1)
    floor = node_vals - lip * np.maximum(nodes - lo, hi - nodes)
    live = floor < np.min(node_vals)
    xs, vals = golden_min_batch(lambda s: _symdiff_many(P, s), lo[live], hi[live], tol=tol,
                                  lipschitz=lip)
    cand_t = np.concatenate([xs, nodes])
    cand_v = np.concatenate([vals, node_vals])
    k = np.lexsort((cand_t, cand_v))[0]
    return float(cand_t[k]), float(cand_v[k])


# ---------------------------------------------------------------------------
# outer and inner radii


def _outer_radius_fn(P: RadialProfile):
    idx = _support_nodes(P)
    rs, vs = P.r[idx], P.v[idx]
    cos_v = np.cos(vs)

    def R(t: float) -> float:
        c = cos_v if t >= 0 else 1.0
        return float(np.sqrt(np.max(rs * rs + t * t - 2.0 * rs * t * c)))

    return R


def r_out(P: RadialProfile, tol: float = 1e-12) -> float:
    """inf over centres of the excess radius of the smallest enclosing ball, floored at 0.

    The circumradius about x is convex in x and invariant under rotations about
    the axis, so restricting x to the axis is exact.
    """
    R = _outer_radius_fn(P)
    ts = np.linspace(-P.r_max, P.r_max, 41)
    vals = np.array([R(t) for t in ts])
    k = int(np.argmin(vals))
    a, b = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
    t, val = golden_min(R, a, b, tol=tol)
    val = min(val, vals[k], R(0.0))
    return max(val - 1.0, 0.0)


class _DistanceField:
    """Distance to the meridian section {(rho, z): rho >= 0, angle <= v(r)}.

    The relative boundary is sampled as polylines; the nearest vertex comes from
    a k-d tree and the distance is then taken to the two segments meeting there.
    """

    def __init__(self, P: RadialProfile, spacing: float = 2e-3):
        self.P = P
        self.pts, chunk = _boundary_polylines(P, spacing)
        idx = np.arange(len(self.pts))
        same_prev = np.concatenate([[False], chunk[1:] == chunk[:-1]])
        same_next = np.concatenate([chunk[:-1] == chunk[1:], [False]])
        self.prev = np.where(same_prev, idx - 1, idx)
        self.next = np.where(same_next, idx + 1, idx)
        self.tree = cKDTree(self.pts, leafsize=64)

    @staticmethod
    def _segment_distance(q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        ab = b - a
        den = np.einsum("ij,ij->i", ab, ab)
        s = np.where(den > 0, np.einsum("ij,ij->i", q - a, ab) / np.where(den > 0, den, 1.0), 0.0)
        foot = a + np.clip(s, 0.0, 1.0)[:, None] * ab
        return np.linalg.norm(q - foot, axis=1)

    def __call__(self, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
        rad = np.hypot(rho, z)
        ang = np.arctan2(rho, z)
        inside = (rad <= self.P.r_max) & (ang <= self.P.value(rad) + 1e-12)
        out = np.zeros(rad.shape)
        q = ~inside
        if np.any(q):
            qq = np.stack([rho[q], z[q]], axis=1)
            _, j = self.tree.query(qq)
            p = self.pts
            d1 = self._segment_distance(qq, p[self.prev[j]], p[j])
            d2 = self._segment_distance(qq, p[j], p[self.next[j]])
            out[q] = np.minimum(d1, d2)
        return out


def _boundary_polylines(P: RadialProfile, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Points (rho, z) on polylines covering the relative boundary of the meridian
    section, with a polyline id per point.  Graph pieces, jump arcs and the
    outer arc at r_max are included; vertices are thinned to about `spacing`.
    """
    r, v = P.r, P.v
    r0, r1, v0, v1 = r[:-1], r[1:], v[:-1], v[1:]
    # cells with v = pi on both ends lie on the negative axis, inside the section
    active = (np.maximum(v0, v1) > 0) & (np.minimum(v0, v1) < math.pi)
    length = np.hypot(r1 - r0, np.maximum(r0, r1) * np.abs(v1 - v0))
    k = np.where(active, np.maximum(2, np.ceil(length / spacing).astype(int) + 1), 0)
    cell = np.repeat(np.arange(r0.size), k)
    start = np.repeat(np.cumsum(k) - k, k)
    u = (np.arange(k.sum()) - start) / (np.repeat(k, k) - 1)
    rr = r0[cell] + u * (r1 - r0)[cell]
    vv = v0[cell] + u * (v1 - v0)[cell]
    prev_active = np.concatenate([[False], active[:-1]])
    chunk_of_cell = np.cumsum(active & ~prev_active)
    chunk = chunk_of_cell[cell]
    v_end = float(P.value(P.r_max))
    if v_end > 0:
        ke = max(2, int(math.ceil(P.r_max * v_end / spacing)) + 1)
        rr = np.concatenate([rr, np.full(ke, P.r_max)])
        vv = np.concatenate([vv, np.linspace(0.0, v_end, ke)])
        chunk = np.concatenate([chunk, np.full(ke, (chunk.max() if chunk.size else 0) + 1)])
    if rr.size == 0:
        return np.zeros((1, 2)), np.zeros(1, dtype=int)
    pts = np.stack([rr * np.sin(vv), rr * np.cos(vv)], axis=1)
    # thin by arc length inside each polyline
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    new_chunk = np.concatenate([[True], chunk[1:] != chunk[:-1]])
    end_chunk = np.concatenate([chunk[:-1] != chunk[1:], [True]])
    seg = np.where(new_chunk[1:], 0.0, seg)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    bucket = np.floor(s / spacing)
    keep = new_chunk | end_chunk | np.concatenate([[True], bucket[1:] != bucket[:-1]])
    return pts[keep], chunk[keep]


def _meridian_boundary(P: RadialProfile, spacing: float) -> np.ndarray:
    return _boundary_polylines(P, spacing)[0]


def meridian_boundary(P: RadialProfile, spacing: float = 1e-3) -> np.ndarray:
    return _meridian_boundary(P, spacing)


def _into_half_disk(rho, z, t):
    """Project points onto the closed half-disk {rho >= 0, |(rho, z - t)| <= 1}."""
    rho = np.maximum(rho, 0.0)
    dz = z - t
    norm = np.hypot(rho, dz)
    scale = np.where(norm > 1.0, 1.0 / np.where(norm > 1.0, norm, 1.0), 1.0)
    return rho * scale, t + dz * scale


def _sup_distance(field: _DistanceField, ts, coarse=(17, 33), keep: int = 4,
                  tol: float = 1e-6) -> np.ndarray:
    """For each t, sup over the half-disk of radius 1 centred at (0, t) of the distance field.

    A Cartesian grid on the half-disk (outside points projected onto its rim)
    is followed by zoomed 7 x 7 grids around the best `keep` local maxima; all
    centres are processed together.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    nr, nz = coarse
    gr = np.linspace(0.0, 1.0, nr)
    gz = np.linspace(-1.0, 1.0, nz)
    R, Z = (a.ravel() for a in np.meshgrid(gr, gz, indexing="ij"))
    rho, z = _into_half_disk(np.tile(R, ts.size), np.tile(Z, ts.size) + np.repeat(ts, R.size),
                             np.repeat(ts, R.size))
    d = field(rho, z).reshape(ts.size, R.size)
    best = d.max(axis=1)
    # zoom from the best grid-local maxima so that separated peaks each get a start
    grid = d.reshape(ts.size, nr, nz)
    pad = np.pad(grid, ((0, 0), (1, 1), (1, 1)), constant_values=-np.inf)
    peak = np.ones(grid.shape, dtype=bool)
    for i in (0, 1, 2):
        for j in (0, 1, 2):
            if (i, j) != (1, 1):
                peak &= grid >= pad[:, i:i + nr, j:j + nz]
    score = np.where(peak.reshape(ts.size, -1), d, -np.inf)
    order = np.argsort(-score, axis=1, kind="stable")[:, :keep]
    rows = np.arange(ts.size)[:, None]
    c_rho = rho.reshape(ts.size, -1)[rows, order].ravel()
    c_z = z.reshape(ts.size, -1)[rows, order].ravel()
    ct = np.repeat(ts, order.shape[1])
    h = gr[1] - gr[0]
    offs = np.linspace(-1.0, 1.0, 7)
    dr, dz = (a.ravel() for a in np.meshgrid(offs, offs, indexing="ij"))
    while h > tol:
        qr, qz = _into_half_disk(c_rho[:, None] + h * dr[None, :], c_z[:, None] + h * dz[None, :],
                                 ct[:, None])
        dd = field(qr.ravel(), qz.ravel()).reshape(qr.shape)
        j = np.argmax(dd, axis=1)
        sel = np.arange(qr.shape[0])
        c_rho, c_z = qr[sel, j], qz[sel, j]
        best = np.maximum(best, dd[sel, j].reshape(ts.size, -1).max(axis=1))
        h /= 3.0
    return best


def r_in(P: RadialProfile, spacing: float = 2e-3, tol: float = 1e-6) -> float:
    """min over axis centres t of sup_{y in B(t e)} dist(y, E).

    Centres are restricted to the axis; for a general set the optimum need
    not lie there, so this is an upper bound for the true inner radius.
    """
    field = _DistanceField(P, spacing)
    ts = np.linspace(-P.r_max, P.r_max, 17)
    ts[8] = 0.0
    vals = _sup_distance(field, ts, tol=tol)
    k = int(np.argmin(vals))
    a, b = ts[max(k - 1, 0)], ts[min(k + 1, ts.size - 1)]
    t, val = golden_min(lambda s: float(_sup_distance(field, s, tol=tol)[0]), a, b, tol=1e-4)
    return float(min(val, vals[k]))


# ---------------------------------------------------------------------------
# report


@dataclass
class DeficitReport:
    diameter: float
    volume: float
    delta: float
    r_out: float
    r_in: float
    hausdorff_lo: float
    hausdorff_hi: float
    symdiff_min: float
    symdiff_t: float
    thm_main_margin: float
    meta: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def main_margin(n: int, delta: float, symdiff: float) -> float:
    """C(n) sqrt(delta) - symdiff / (3 |B|)."""
    return constant_C(n).C * math.sqrt(max(delta, 0.0)) - symdiff / (3.0 * unit_ball_volume(n))


def normalized(P: RadialProfile, diam: float | None = None) -> tuple[RadialProfile, float]:
    """(P rescaled to diameter 2, its diameter).

    The diameter search is scale-equivariant, so the rescaled profile is not
    measured again: its diameter is 2 up to rounding.
    """
    diam = diameter(P) if diam is None else diam
    if not diam > 0:
        raise ProfileError("profile has zero diameter")
    if abs(diam - 2.0) <= 1e-14:
        return P, diam
    return P.scaled(2.0 / diam), 2.0


def theorem_margin(P: RadialProfile) -> tuple[float, float, float]:
    """(delta, symdiff_min, margin) for the main stability inequality, after normalisation."""
    Q, diam = normalized(P)
    vol = _require_volume(Q)
    delta = isodiametric_deficit(Q, diam=diam, vol=vol)
    _, sd = best_symdiff(Q)
    return delta, sd, main_margin(Q.n, delta, sd)


def report(P: RadialProfile, with_r_in: bool = True) -> DeficitReport:
    Q, diam = normalized(P)
    vol = _require_volume(Q)
    delta = isodiametric_deficit(Q, diam=diam, vol=vol)
    t_best, sd = best_symdiff(Q)
    ro = r_out(Q)
    ri = r_in(Q) if with_r_in else math.nan
    lo = max(ri, ro) if with_r_in else ro
    meta = {"r_in_centres": "axis only", "scale": float(Q.r_max / P.r_max)}
    return DeficitReport(
        diameter=diam,
        volume=vol,
        delta=delta,
        r_out=ro,
        r_in=ri,
        hausdorff_lo=lo,
        hausdorff_hi=2.0 * lo,
        symdiff_min=sd,
        symdiff_t=t_best,
        thm_main_margin=main_margin(Q.n, delta, sd),
        meta=meta,
    )
