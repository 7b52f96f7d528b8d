from __future__ import annotations

import json
import math

import numpy as np
import pytest

from isodiam import profiles as pr
from isodiam import rearrange as ra
from isodiam.geomcore import sphere_area, unit_ball_volume


def _unit_ball(n):
    return ra.ball_set(n, [ra.Ball(np.zeros(n), 1.0)])


def test_slice_inside_ball_is_full_cap():
    s = ra.slice_angle(_unit_ball(3), 0.5)
    assert s.angle == math.pi
    assert s.fraction == 1.0


def test_slice_half_space_is_hemisphere():
    # slab {x_0 > 0} inside B_2: exactly half of every sphere
    E = ra.IndicatorSet(3, lambda q: (q[:, 0] > 0) & (np.sum(q * q, axis=1) < 4), 2.0)
    s = ra.slice_angle(E, 1.0, samples=20_000)
    assert abs(s.angle - math.pi / 2) <= 3 * s.angle_se


def test_slice_missing_the_sphere_is_empty():
    E = ra.ball_set(3, [ra.Ball(np.array([0.0, 0.0, 0.5]), 0.3)])
    s = ra.slice_angle(E, 0.1)
    assert s.angle == 0.0 and s.fraction == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_slice_of_offset_ball_matches_cap_formula(n):
    # the sphere of radius r meets B_rho(c) in a cap of angular radius acos((r^2 + c^2 - rho^2) / (2 r c))
    c, rho, r = 0.6, 0.5, 0.7
    E = ra.ball_set(n, [ra.Ball(np.eye(n)[0] * c, rho)])
    exact = math.acos((r * r + c * c - rho * rho) / (2 * r * c))
    s = ra.slice_angle(E, r, samples=20_000, seed=3)
    assert abs(s.angle - exact) <= 4 * s.angle_se


@pytest.mark.parametrize("method", ra.SAMPLERS)
def test_sampler_is_uniform_on_the_sphere(method):
    rng = np.random.default_rng(0)
    x = ra._sphere_points(4, 20_000, rng, method)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)
    assert np.max(np.abs(x.mean(axis=0))) < 0.03
    assert np.allclose(x.T @ x / len(x), np.eye(4) / 4, atol=0.02)


def test_stratified_cells_fill_the_count():
    for n, count in ((2, 1000), (3, 5000), (5, 20_000)):
        pts = ra._stratified_points(n, count, np.random.default_rng(1))
        assert 0.8 * count <= len(pts) <= count


def test_ball_is_a_fixed_point():
    R = ra.rearrange_sc(_unit_ball(3), grid_size=64, samples=2000)
    P = R.profile
    inside = P.r < 1.0 - 1e-9
    assert np.all(R.angles[inside] == math.pi)
    assert pr.volume(P) == pytest.approx(unit_ball_volume(3), abs=unit_ball_volume(3) * 3 / 64)


def test_offset_ball_volume_and_diameter():
    E = ra.ball_set(3, [ra.Ball(np.array([0.3, 0.0, 0.0]), 1.0)])
    grid = 128
    R = ra.rearrange_sc(E, grid_size=grid, samples=10_000)
    tol = E.r_bound / grid
    assert abs(pr.volume(R.profile) - unit_ball_volume(3)) <= 3 * R.volume_se + 3 * tol * sphere_area(3)
    assert pr.diameter(R.profile) <= 2.0 + 2 * tol


def test_two_disjoint_balls():
    E = ra.ball_set(2, [ra.Ball(np.array([0.5, 0.0]), 0.3), ra.Ball(np.array([-0.4, 0.2]), 0.2)])
    assert E.known_volume == pytest.approx(math.pi * (0.09 + 0.04))
    assert E.known_diameter == pytest.approx(math.hypot(0.9, 0.2) + 0.5)
    R = ra.rearrange_sc(E, grid_size=256, samples=5000)
    assert abs(pr.volume(R.profile) - E.known_volume) <= 3 * R.volume_se + 0.01
    assert pr.diameter(R.profile) <= E.known_diameter + 2 * E.r_bound / 256


def test_known_values_absent_when_not_available():
    overlap = ra.ball_set(2, [ra.Ball(np.zeros(2), 0.5), ra.Ball(np.array([0.3, 0.0]), 0.5)])
    assert overlap.known_volume is None and overlap.known_diameter is not None
    holed = ra.ball_set(2, [ra.Ball(np.zeros(2), 1.0), ra.Ball(np.array([0.3, 0.0]), 0.2, -1)])
    assert holed.known_volume is None and holed.known_diameter is None
    assert not holed.contains(np.array([[0.3, 0.0]]))[0]


def test_profile_set_is_idempotent():
    rng = np.random.default_rng(5)
    P = pr.normalized(pr.random_profile(3, rng))[0]
    E = ra.profile_set(P)
    for r in np.linspace(0.1, 0.95, 6) * P.r_max:
        s = ra.slice_angle(E, r, samples=20_000, seed=int(r * 1e6))
        assert abs(s.angle - float(P.value(r))) <= 4 * s.angle_se + 1e-12


def test_deterministic_across_threads():
    E = ra.random_disjoint_balls(3, np.random.default_rng(2))
    a = ra.rearrange_sc(E, 64, 1000, seed=9, threads=1)
    b = ra.rearrange_sc(E, 64, 1000, seed=9, threads=3)
    assert np.array_equal(a.angles, b.angles)
    assert a.volume_se == b.volume_se
    c = ra.rearrange_sc(E, 64, 1000, seed=10)
    assert not np.array_equal(a.angles, c.angles)


def test_random_disjoint_balls_are_disjoint():
    rng = np.random.default_rng(8)
    for _ in range(20):
        E = ra.random_disjoint_balls(3, rng)
        assert E.known_volume is not None


def test_errors():
    E = _unit_ball(3)
    with pytest.raises(ra.OracleError):
        ra.slice_angle(E, 0.0)
    with pytest.raises(ra.OracleError):
        ra.slice_angle(E, 5.0)
    with pytest.raises(ra.OracleError):
        ra.slice_angle(E, 0.5, samples=999)
    with pytest.raises(ra.OracleError):
        ra.rearrange_sc(E, grid_size=32)
    with pytest.raises(ra.OracleError):
        ra.slice_angle(E, 0.5, method="sobol")
    # r_bound smaller than the set
    bad = ra.IndicatorSet(3, E.contains, 0.5)
    with pytest.raises(ra.OracleError):
        ra.rearrange_sc(bad, 64, 1000)
    with pytest.raises(ra.OracleError):
        ra.IndicatorSet(3, E.contains, 0.0)
    with pytest.raises(ra.OracleError):
        ra.ball_set(2, [ra.Ball(np.zeros(2), 1.0, -1)])


def test_json_oracle():
    doc = [{"center": [0, 0, 0.2], "radius": 0.5}, {"center": [0, 0, 0.2], "radius": 0.1, "sign": -1}]
    E = ra.ball_set_from_json(json.dumps(doc))
    assert E.n == 3
    assert E.contains(np.array([[0, 0, 0.5], [0, 0, 0.2]])).tolist() == [True, False]
    with pytest.raises(ra.OracleError):
        ra.ball_set_from_json(json.dumps(doc), n=2)
    for text in ("[]", "{", '[{"radius": 1}]', '[{"center": [0, 0], "radius": "x"}]'):
        with pytest.raises(ra.OracleError):
            ra.ball_set_from_json(text)
