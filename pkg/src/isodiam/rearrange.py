"""Rearrangement by spherical caps of sets given by a membership oracle.

Each sphere |q| = r meets the set in a slice whose measure is estimated by
sampling; the slice is replaced by the cap around the pole e_n of the same
measure.  The cap angles over a radius grid form a RadialProfile.

The default sampler is stratified: the sphere is cut into equal-area cells in
hyperspherical coordinates (the polar angle measured from e_n) and every cell
receives one uniform point.  With proportional allocation the variance never
exceeds that of plain uniform sampling, so the binomial standard error quoted
with each slice is a valid upper bound.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import betaincinv

from .geomcore import check_dimension, inverse_cap_area, sphere_area, unit_ball_volume
from .profiles import RadialProfile

DEFAULT_GRID = 1024
DEFAULT_SAMPLES = 20_000
MIN_SAMPLES = 1000


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class IndicatorSet:
    """Bounded set through its membership predicate; contains maps (m, n) points to (m,) booleans."""

    n: int
    contains: Callable[[np.ndarray], np.ndarray]
    r_bound: float
    known_volume: float | None = None
    known_diameter: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        check_dimension(self.n)
        if not self.r_bound > 0:
            raise OracleError("r_bound must be positive")


@dataclass(frozen=True)
class SliceEstimate:
    r: float
    angle: float
    fraction: float
    fraction_se: float
    angle_se: float
    samples: int = 0


@dataclass(frozen=True)
class Rearrangement:
    profile: RadialProfile
    slices: list[SliceEstimate]
    volume_se: float

    @property
    def angles(self) -> np.ndarray:
        return np.array([s.angle for s in self.slices])

    @property
    def angle_se(self) -> np.ndarray:
        return np.array([s.angle_se for s in self.slices])


# ---------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    sign: int = 1


def ball_set(n: int, balls: Sequence[Ball]) -> IndicatorSet:
    """Points in some positive ball and in no negative ball (open balls)."""
    n = check_dimension(n)
    if not balls or not any(b.sign > 0 for b in balls):
        raise OracleError("need at least one positive ball")
    centers = np.array([np.asarray(b.center, dtype=float) for b in balls])
    if centers.shape != (len(balls), n):
        raise OracleError(f"ball centres must have {n} coordinates")
    radii = np.array([float(b.radius) for b in balls])
    if np.any(radii <= 0):
        raise OracleError("ball radii must be positive")
    pos = np.array([b.sign > 0 for b in balls])

    def contains(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        inside = np.zeros(len(pts), dtype=bool)
        hole = np.zeros(len(pts), dtype=bool)
        for c, r, p in zip(centers, radii, pos):
            d = pts - c
            hit = np.einsum("ij,ij->i", d, d) < r * r
            if p:
                inside |= hit
            else:
                hole |= hit
        return inside & ~hole

    norms = np.linalg.norm(centers, axis=1)
    r_bound = float(np.max((norms + radii)[pos])) * (1.0 + 1e-9)
    pc, pr = centers[pos], radii[pos]
    # farthest points of two balls: |c_i - c_j| + r_i + r_j; any union of balls
    gaps = np.linalg.norm(pc[:, None, :] - pc[None, :, :], axis=2)
    known_diameter = float(np.max(gaps + pr[:, None] + pr[None, :])) if np.all(pos) else None
    known_volume = None
    if np.all(pos):
        disjoint = np.all(gaps + np.eye(len(pc)) * 1e300 >= pr[:, None] + pr[None, :])
        if disjoint:
            known_volume = float(unit_ball_volume(n) * np.sum(pr ** n))
    return IndicatorSet(n, contains, r_bound, known_volume, known_diameter,
                        {"kind": "balls", "balls": len(balls)})


def ball_set_from_json(text: str, n: int | None = None) -> IndicatorSet:
    """Oracle from a JSON list [{"center": [...], "radius": r, "sign": +1 or -1}, ...]."""
    try:
        doc = json.loads(text)
        balls = [Ball(np.asarray(d["center"], dtype=float), float(d["radius"]), int(d.get("sign", 1)))
                 for d in doc]
    except (KeyError, TypeError, ValueError) as exc:
        raise OracleError(f"malformed oracle document: {exc}") from exc
    if not balls:
        raise OracleError("empty oracle document")
    dim = len(balls[0].center)
    if n is not None and n != dim:
        raise OracleError(f"oracle is {dim}-dimensional, expected {n}")
    return ball_set(dim, balls)


def random_disjoint_balls(n: int, rng: np.random.Generator, k_range: tuple[int, int] = (1, 4),
                          spread: float = 1.0) -> IndicatorSet:
    """Union of k pairwise disjoint balls with centres in B_spread; rejection sampling."""
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    balls: list[Ball] = []
    while len(balls) < k:
        c = rng.uniform(-spread, spread, n)
        r = float(rng.uniform(0.1, 0.5))
        if all(np.linalg.norm(c - b.center) > r + b.radius for b in balls):
            balls.append(Ball(c, r))
    return ball_set(n, balls)


def profile_set(P: RadialProfile) -> IndicatorSet:
    """Oracle for a profile set, whose axis is e_n like the rearrangement pole."""
    from .profiles import diameter, volume

    return IndicatorSet(P.n, P.contains, P.r_max * (1.0 + 1e-9), volume(P), diameter(P),
                        {"kind": "profile"})


# ---------------------------------------------------------------------------
# slices


SAMPLERS = ("stratified", "gaussian")


def _gaussian_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _cube_to_sphere(n: int, u: np.ndarray) -> np.ndarray:
    """Measure-preserving map [0,1]^(n-1) -> S^(n-1); u[:, 0] drives the angle from e_n."""
    x = np.empty((u.shape[0], n))
    s = np.ones(u.shape[0])
    for j in range(n - 2):
        # polar angle j has density ~ sin^k, i.e. (1 - cos)/2 ~ Beta((k+1)/2, (k+1)/2)
        a = 0.5 * (n - 1 - j)
        c = 1.0 - 2.0 * betaincinv(a, a, u[:, j])
        x[:, n - 1 - j] = s * c
        s = s * np.sqrt(np.maximum(1.0 - c * c, 0.0))
    phi = 2.0 * math.pi * u[:, -1]
    x[:, 0] = s * np.cos(phi)
    x[:, 1] = s * np.sin(phi)
    return x


def _stratified_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform point in each of about `count` equal-area cells."""
    d = n - 1
    m = max(1, int(math.floor(count ** (1.0 / d) + 1e-9)))
    last = count // m ** (d - 1)
    shape = (m,) * (d - 1) + (last,)
    idx = np.indices(shape).reshape(d, -1).T
    u = (idx + rng.random(idx.shape)) / np.array(shape, dtype=float)
    return _cube_to_sphere(n, u)


def _sphere_points(n: int, count: int, rng: np.random.Generator, method: str) -> np.ndarray:
    if method == "stratified":
        return _stratified_points(n, count, rng)
    if method == "gaussian":
        return _gaussian_points(n, count, rng)
    raise OracleError(f"unknown sampler {method!r}; choose from {SAMPLERS}")


def _fraction_se(hits: int, samples: int) -> float:
    # Laplace-smoothed proportion so that all-in / all-out slices keep a nonzero error bar
    p = (hits + 1.0) / (samples + 2.0)
    return math.sqrt(p * (1.0 - p) / samples)


def _estimate(E: IndicatorSet, r: float, samples: int, rng: np.random.Generator,
              method: str) -> SliceEstimate:
    n = E.n
    if r == 0.0:
        inside = bool(E.contains(np.zeros((1, n)))[0])
        return SliceEstimate(0.0, math.pi if inside else 0.0, float(inside), 0.0, 0.0, 1)
    pts = _sphere_points(n, samples, rng, method)
    samples = len(pts)
    hits = int(np.count_nonzero(E.contains(r * pts)))
    frac = hits / samples
    se = _fraction_se(hits, samples)
    full = sphere_area(n)
    angle = float(inverse_cap_area(n, frac * full))
    lo = float(inverse_cap_area(n, max(frac - se, 0.0) * full))
    hi = float(inverse_cap_area(n, min(frac + se, 1.0) * full))
    return SliceEstimate(float(r), angle, frac, se, 0.5 * (hi - lo), samples)


def slice_angle(E: IndicatorSet, r: float, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                method: str = "stratified") -> SliceEstimate:
    """Cap angle v with r^(n-1) |K[e, v]| = H^(n-1)(E on the sphere of radius r), by Monte Carlo.

    The angle's standard error is the half-width of the image of
    fraction +- se under the inverse cap measure (delta method, kept finite at
    the ends of [0, pi]).
    """
    if not 0.0 < r <= E.r_bound:
        raise OracleError(f"radius {r} outside (0, {E.r_bound}]")
    if samples < MIN_SAMPLES:
        raise OracleError(f"need at least {MIN_SAMPLES} samples")
    return _estimate(E, float(r), int(samples), np.random.default_rng(seed), method)


def rearrange_sc(E: IndicatorSet, grid_size: int = DEFAULT_GRID, samples: int = DEFAULT_SAMPLES,
                 seed: int = 0, method: str = "stratified", threads: int = 1) -> Rearrangement:
    """Spherical-cap rearrangement on grid_size + 1 radii in [0, r_bound].

    Every radius draws from its own stream spawned from `seed`, so results do
    not depend on evaluation order or on `threads`.  The volume standard error propagates the
    slice errors through the trapezoid weights r^(n-1) h |S^(n-1)|.
    """
    if grid_size < 64:
        raise OracleError("grid_size must be at least 64")
    if samples < MIN_SAMPLES:
        raise OracleError(f"need at least {MIN_SAMPLES} samples")
    radii = np.linspace(0.0, E.r_bound, grid_size + 1)
    streams = np.random.SeedSequence(seed).spawn(radii.size)
    job = lambda k: _estimate(E, float(radii[k]), samples, np.random.default_rng(streams[k]), method)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            slices = list(pool.map(job, range(radii.size)))
    else:
        slices = [job(k) for k in range(radii.size)]
    if slices[-1].fraction > 0:
        raise OracleError("oracle reports points on the sphere of radius r_bound")
    v = np.array([s.angle for s in slices])
    h = radii[1] - radii[0]
    w = h * radii ** (E.n - 1)
    w[[0, -1]] *= 0.5
    fse = np.array([s.fraction_se for s in slices])
    vol_se = sphere_area(E.n) * float(np.sqrt(np.sum((w * fse) ** 2)))
    meta = {"kind": "rearranged", "grid": grid_size, "samples": samples, "seed": seed, "sampler": method}
    return Rearrangement(RadialProfile(E.n, radii, v, meta), slices, vol_se)

