"""Convex bodies: hulls, perimeter, the Cauchy projection formula and deficits.

Two kinds of body are supported.  A Polytope is the hull of a point cloud in
the plane or in space (Qhull via scipy).  A Revolution is an axially symmetric
convex body in R^n given by its meridian radius rho(z), piecewise linear, so
that volume and perimeter are exact frustum sums.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._planar import polygon_diameter
from .geomcore import check_dimension, sphere_area, unit_ball_volume
from .profiles import RadialProfile, isodiametric_deficit, meridian_boundary, normalized, volume


class ConvexError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Polytope:
    n: int
    vertices: np.ndarray
    hull: ConvexHull

    def scaled(self, lam: float) -> "Polytope":
        return convex_hull(lam * self.vertices)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        eq = self.hull.equations
        return np.all(pts @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)


@dataclass(frozen=True, eq=False)
class Revolution:
    """Body {x : |x - (x.e)e| <= rho(x.e)} with rho concave and piecewise linear on [z[0], z[-1]]."""

    n: int
    z: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        check_dimension(self.n)
        z = np.array(self.z, dtype=float)
        rho = np.array(self.rho, dtype=float)
        if z.ndim != 1 or z.size < 2 or z.size != rho.size:
            raise ConvexError("meridian needs at least two matching samples")
        if np.any(np.diff(z) <= 0):
            raise ConvexError("meridian abscissae must increase")
        if np.any(rho < 0):
            raise ConvexError("meridian radius must be nonnegative")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "rho", rho)

    def scaled(self, lam: float) -> "Revolution":
        return Revolution(self.n, lam * self.z, lam * self.rho)

    def meridian_polygon(self) -> np.ndarray:
        """Full meridian section (z, y) counter-clockwise, mirror half included."""
        upper = np.stack([self.z[::-1], self.rho[::-1]], axis=1)
        lower = np.stack([self.z, -self.rho], axis=1)
        poly = np.concatenate([lower, upper])
        # drop repeated axis points at the ends
        keep = np.ones(len(poly), dtype=bool)
        keep[1:] = np.any(np.diff(poly, axis=0) != 0, axis=1)
        return poly[keep]

    def radius_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        inside = (z >= self.z[0]) & (z <= self.z[-1])
        return np.where(inside, np.interp(z, self.z, self.rho), -np.inf)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """Membership for points of R^n; the axis is the last coordinate, as for profiles."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        z = pts[:, -1]
        rho = np.linalg.norm(pts[:, :-1], axis=1)
        zc = np.clip(z, self.z[0], self.z[-1])
        outside_z = np.maximum(self.z[0] - z, z - self.z[-1])
        return (outside_z <= tol) & (rho <= np.interp(zc, self.z, self.rho) + tol)


ConvexBody = Union[Polytope, Revolution]


@dataclass
class ConvexReport:
    perimeter: float
    volume: float
    diameter: float
    delta_prime: float
    t_F: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


# ---------------------------------------------------------------------------
# construction


def convex_hull(points, n: int | None = None) -> Polytope:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = pts.shape[1]
    if n is not None and n != dim:
        raise ConvexError(f"points are {dim}-dimensional, expected {n}")
    if dim not in (2, 3):
        raise ConvexError("polytopes are supported in dimensions 2 and 3")
    if len(pts) < dim + 1:
        raise ConvexError("need at least n + 1 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise ConvexError("degenerate (flat) point set") from exc
    if not hull.volume > 0:
        raise ConvexError("degenerate (flat) point set")
    return Polytope(dim, pts[hull.vertices], hull)


def _upper_chain(zy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper chain (z ascending) of the hull of zy (y >= 0) and its mirror image.

    A point l p + (1 - l) m of the symmetric hull, m mirrored, is dominated by
    l p + (1 - l) m' with m' the reflection of m, so the upper chain is that of
    the hull of zy alone.
    """
    hull = ConvexHull(zy)
    up = zy[hull.vertices]
    order = np.lexsort((-up[:, 1], up[:, 0]))
    up = up[order]
    # the lower chain of zy is dropped: keep the topmost vertex per abscissa and
    # then only the concave part between the extreme abscissae
    _, first = np.unique(up[:, 0], return_index=True)
    up = up[first]
    keep = np.ones(len(up), dtype=bool)
    if len(up) > 2:
        a, b = up[0], up[-1]
        line = a[1] + (up[:, 0] - a[0]) * (b[1] - a[1]) / (b[0] - a[0])
        keep[1:-1] = up[1:-1, 1] > line[1:-1]
    up = up[keep]
    return up[:, 0], np.maximum(up[:, 1], 0.0)


def hull_of_profile(P: RadialProfile, spacing: float = 3e-5) -> Revolution:
    """Convex envelope of a profile set as a body of revolution.

    The full meridian section of the hull is the planar hull of the meridian
    section and its mirror image, so the planar hull of densely sampled section
    boundary points gives an inscribed polygonal meridian (chord error about
    spacing^2 / 8 on unit arcs; thinning leaves chords up to twice the spacing,
    so the default keeps the gap below 1e-9 on arcs of radius 1/2 or more).
    """
    b = meridian_boundary(P, spacing)
    zy = np.stack([b[:, 1], b[:, 0]], axis=1)
    # axis points under the extremes keep the hull two-dimensional for thin sections
    zy = np.concatenate([zy, [[zy[:, 0].min(), 0.0], [zy[:, 0].max(), 0.0]]])
    z, rho = _upper_chain(zy)
    if z.size < 2:
        raise ConvexError("profile set is too thin to have a hull")
    return Revolution(P.n, z, rho)


def random_polytope(n: int, rng: np.random.Generator, m_range: tuple[int, int] = (10, 200)) -> Polytope:
    """Hull of m uniform points in the unit ball, m uniform in m_range, rescaled to diameter 2."""
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    x = rng.standard_normal((m, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(size=(m, 1)) ** (1.0 / n)
    F = convex_hull(x)
    return F.scaled(2.0 / diameter(F))


def polygon_body(vertices) -> Polytope:
    return convex_hull(np.asarray(vertices, dtype=float), n=2)


# ---------------------------------------------------------------------------
# measures


def _power_mean_sum(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    # sum_{j=0}^{k-1} a^j b^(k-1-j) = (b^k - a^k) / (b - a) without the division
    out = np.zeros_like(a)
    for j in range(k):
        out += a ** j * b ** (k - 1 - j)
    return out


def perimeter(F: ConvexBody) -> float:
    if isinstance(F, Polytope):
        return float(F.hull.area)
    n = F.n
    a, b = F.rho[:-1], F.rho[1:]
    length = np.hypot(np.diff(F.z), b - a)
    lateral = sphere_area(n - 1) * np.sum(length * _power_mean_sum(a, b, n - 1)) / (n - 1)
    caps = unit_ball_volume(n - 1) * (F.rho[0] ** (n - 1) + F.rho[-1] ** (n - 1))
    return float(lateral + caps)


def body_volume(F: ConvexBody) -> float:
    if isinstance(F, Polytope):
        return float(F.hull.volume)
    n = F.n
    a, b = F.rho[:-1], F.rho[1:]
    return float(unit_ball_volume(n - 1) * np.sum(np.diff(F.z) * _power_mean_sum(a, b, n)) / n)


def diameter(F: ConvexBody) -> float:
    if isinstance(F, Revolution):
        # the farthest pair of a body of revolution lies in one meridian plane
        return polygon_diameter(F.meridian_polygon())
    v = F.vertices
    if F.n == 2:
        ring = F.hull.points[F.hull.vertices]  # counter-clockwise in 2-D
        return polygon_diameter(ring)
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


def delta_prime(F: ConvexBody) -> float:
    """Isoperimetric deficit P / (n |B|^(1/n) |F|^((n-1)/n)) - 1."""
    vol = body_volume(F)
    if not vol > 0:
        raise ConvexError("body has zero volume")
    n = F.n
    return perimeter(F) / (n * unit_ball_volume(n) ** (1.0 / n) * vol ** ((n - 1) / n)) - 1.0


def convex_report(F: ConvexBody) -> ConvexReport:
    vol = body_volume(F)
    return ConvexReport(perimeter(F), vol, diameter(F), delta_prime(F),
                        (vol / unit_ball_volume(F.n)) ** (1.0 / F.n))


# ---------------------------------------------------------------------------
# Cauchy formula


def _unit_directions(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def projected_measure(F: Polytope, nu) -> np.ndarray:
    """H^(n-1) of the orthogonal projection of F onto the hyperplane nu-perp.

    Plane: the width along the direction perpendicular to nu.  Space: the area
    of the planar hull of the projected vertices.
    """
    nus = np.atleast_2d(np.asarray(nu, dtype=float))
    nus = nus / np.linalg.norm(nus, axis=1, keepdims=True)
    v = F.vertices
    out = np.empty(len(nus))
    for i, u in enumerate(nus):
        if F.n == 2:
            w = v @ np.array([-u[1], u[0]])
            out[i] = w.max() - w.min()
        else:
            # orthonormal basis of u-perp
            a = np.eye(3)[np.argmin(np.abs(u))]
            e1 = np.cross(u, a)
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(u, e1)
            out[i] = ConvexHull(np.stack([v @ e1, v @ e2], axis=1)).volume
    return out


def _facet_projection(F: Polytope, nus: np.ndarray) -> np.ndarray:
    # for a convex body the projection is covered twice by the boundary:
    # H^(n-1)(F_nu) = 1/2 sum_f |facet_f| |n_f . nu|
    hull = F.hull
    pts = hull.points
    normals = hull.equations[:, :-1]
    simp = pts[hull.simplices]
    if F.n == 2:
        sizes = np.linalg.norm(simp[:, 1] - simp[:, 0], axis=1)
    else:
        sizes = 0.5 * np.linalg.norm(np.cross(simp[:, 1] - simp[:, 0], simp[:, 2] - simp[:, 0]), axis=1)
    return 0.5 * np.abs(nus @ normals.T) @ sizes


def cauchy_perimeter(F: Polytope, directions: int = 100_000, seed: int = 0,
                     chunk: int = 8192) -> tuple[float, float]:
    """Monte Carlo Cauchy formula: P = |S^(n-1)| / |B^(n-1)| * mean over nu of H^(n-1)(F_nu).

    Returns (estimate, standard error).  Projection measures are evaluated in
    batches through the facet formula; `projected_measure` is the direct route.
    """
    if not isinstance(F, Polytope):
        raise ConvexError("Cauchy estimator is implemented for polytopes")
    if directions < 1000:
        raise ConvexError("need at least 1000 directions")
    rng = np.random.default_rng(seed)
    vals = np.empty(directions)
    for k0 in range(0, directions, chunk):
        k1 = min(directions, k0 + chunk)
        vals[k0:k1] = _facet_projection(F, _unit_directions(F.n, k1 - k0, rng))
    factor = sphere_area(F.n) / unit_ball_volume(F.n - 1)
    est = factor * float(np.mean(vals))
    se = factor * float(np.std(vals, ddof=1)) / math.sqrt(directions)
    return est, se


# ---------------------------------------------------------------------------
# the two inequalities


def check_perimeter_bound(F: ConvexBody) -> float:
    """P(B) - P(F) after rescaling F to diameter 2; nonnegative for convex F."""
    d = diameter(F)
    if not d > 0:
        raise ConvexError("body has zero diameter")
    G = F if abs(d - 2.0) <= 1e-14 else F.scaled(2.0 / d)
    return sphere_area(F.n) - perimeter(G)


def check_deficit_lemma(P: RadialProfile, tol: float = 1e-8) -> tuple[float, float]:
    """(delta(E), delta'(hull E)) for the diameter-normalised profile.

    Raises ConvexError when delta' exceeds delta by more than tol.
    """
    Q, diam = normalized(P)
    delta = isodiametric_deficit(Q, diam=diam, vol=volume(Q))
    dp = delta_prime(hull_of_profile(Q))
    if dp > delta + tol:
        raise ConvexError(f"hull deficit {dp:.3e} exceeds isodiametric deficit {delta:.3e}")
    return delta, dp
