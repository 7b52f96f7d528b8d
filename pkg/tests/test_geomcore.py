from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodiam.geomcore import (
    cap_area,
    cap_area_derivative,
    cap_area_quadrature,
    chord,
    clamp_unit,
    constant_C,
    inverse_cap_area,
    psi,
    sphere_area,
    unit_ball_volume,
)

DIMS = range(2, 9)


def test_unit_ball_volume_examples():
    assert unit_ball_volume(2) == pytest.approx(math.pi, abs=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, abs=1e-15)
    assert unit_ball_volume(4) == pytest.approx(math.pi ** 2 / 2, abs=1e-15)


@pytest.mark.parametrize("n", DIMS)
def test_unit_ball_volume_gamma(n):
    assert unit_ball_volume(n) == pytest.approx(math.pi ** (n / 2) / math.gamma(n / 2 + 1), rel=1e-14)
    assert sphere_area(n) == pytest.approx(n * unit_ball_volume(n), rel=1e-15)


def test_unit_ball_volume_monte_carlo_n4():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, (400_000, 4))
    p = np.mean(np.sum(x * x, axis=1) < 1)
    se = math.sqrt(p * (1 - p) / x.shape[0]) * 16
    assert abs(16 * p - unit_ball_volume(4)) < 4 * se


def test_cap_area_examples():
    assert cap_area(2, math.pi) == 2 * math.pi
    assert cap_area(3, math.pi / 2) == pytest.approx(2 * math.pi, abs=1e-14)
    assert cap_area(3, math.pi / 3) == pytest.approx(math.pi, abs=1e-14)


@pytest.mark.parametrize("n", DIMS)
def test_cap_area_endpoints_exact(n):
    assert cap_area(n, 0.0) == 0.0
    assert cap_area(n, math.pi) == sphere_area(n)


@pytest.mark.parametrize("n", DIMS)
def test_cap_area_strictly_increasing(n):
    a = cap_area(n, np.linspace(0, math.pi, 1000))
    assert np.all(np.diff(a) > 0)


@pytest.mark.parametrize("n", DIMS)
def test_cap_area_matches_quadrature(n):
    alpha = np.linspace(0, math.pi, 301)
    assert np.max(np.abs(cap_area(n, alpha) - cap_area_quadrature(n, alpha))) < 1e-12


@pytest.mark.parametrize("n", [4, 6, 8])
def test_cap_area_tiny_caps_keep_relative_accuracy(n):
    # leading term s_{n-2} a^{n-1} / (n-1)
    a = 1e-6
    lead = sphere_area(n - 1) * a ** (n - 1) / (n - 1)
    assert cap_area(n, a) == pytest.approx(lead, rel=1e-9)


def test_cap_area_derivative_matches_difference():
    for n in DIMS:
        a, h = 1.1, 1e-6
        fd = (cap_area(n, a + h) - cap_area(n, a - h)) / (2 * h)
        assert cap_area_derivative(n, a) == pytest.approx(fd, rel=1e-7)


def test_inverse_cap_area_examples():
    assert inverse_cap_area(3, 2 * math.pi) == pytest.approx(math.pi / 2, abs=1e-13)
    assert inverse_cap_area(2, 0.0) == 0.0
    assert inverse_cap_area(3, math.pi) == pytest.approx(math.pi / 3, abs=1e-13)


@pytest.mark.parametrize("n", DIMS)
def test_inverse_cap_area_full_sphere_is_pi(n):
    assert inverse_cap_area(n, sphere_area(n)) == math.pi


@pytest.mark.parametrize("n", DIMS)
def test_area_round_trip(n):
    areas = np.linspace(0, sphere_area(n), 1000)
    assert np.max(np.abs(cap_area(n, inverse_cap_area(n, areas)) - areas)) <= 1e-12 * sphere_area(n)


@pytest.mark.parametrize("n", DIMS)
def test_angle_round_trip_where_well_conditioned(n):
    a = np.linspace(0, math.pi - 0.25, 1000)
    assert np.max(np.abs(inverse_cap_area(n, cap_area(n, a)) - a)) < 1e-10


def test_inputs_validated():
    with pytest.raises(ValueError):
        cap_area(3, -0.1)
    with pytest.raises(ValueError):
        cap_area(3, 4.0)
    with pytest.raises(ValueError):
        cap_area(9, 1.0)
    with pytest.raises(ValueError):
        cap_area(2.5, 1.0)
    with pytest.raises(ValueError):
        inverse_cap_area(3, 5 * math.pi)
    with pytest.raises(ValueError):
        inverse_cap_area(3, -1.0)


def test_chord_examples():
    assert chord(1, 1, math.pi) == pytest.approx(2.0, abs=1e-15)
    assert chord(1, 1, 0) == 0.0
    assert chord(1.1, 1.0, math.pi / 2) == pytest.approx(math.sqrt(2.21), abs=1e-14)
    with pytest.raises(ValueError):
        chord(-1, 1, 0.3)


@given(r=st.floats(0, 10), theta=st.floats(0, math.pi))
def test_chord_equal_radii_identity(r, theta):
    assert chord(r, r, theta) == pytest.approx(2 * r * math.sin(theta / 2), abs=1e-12)


@given(r1=st.floats(0, 5), r2=st.floats(0, 5), theta=st.floats(0, math.pi))
def test_chord_law_of_cosines(r1, r2, theta):
    direct = math.hypot(r1 - r2 * math.cos(theta), r2 * math.sin(theta))
    assert chord(r1, r2, theta) == pytest.approx(direct, abs=1e-12)
    assert chord(r1, r2, theta) == chord(r2, r1, theta)


def test_psi_examples():
    # formula value; the rounded decimal quoted alongside it does not match arccos(1.79/2.2)
    assert psi(0.0, 0.1, 0.1) == pytest.approx(math.acos(1.79 / 2.2), abs=1e-14)
    assert psi(0.05, 0.05, 0.1) == 0.0
    with pytest.raises(ValueError):
        psi(0.2, 0.1, 0.3)
    with pytest.raises(ValueError):
        psi(0.0, 0.1, 0.5)


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.4])
def test_psi_below_sqrt_bound(eps):
    t = np.linspace(0, eps, 100)
    S, T = np.meshgrid(t, t, indexing="ij")
    m = S <= T
    assert np.all(psi(S[m], T[m], eps) <= math.pi * np.sqrt(T[m] - S[m]) + 1e-12)


def test_constants():
    c2 = constant_C(2)
    assert c2.C0 == pytest.approx(181 * 8 / (2 - math.sqrt(2)) ** 1.5, rel=1e-14)
    c3 = constant_C(3)
    assert c3.C0 == pytest.approx(181 * 27 / (2 - 2 ** (2 / 3)) ** 1.5, rel=1e-14)
    for n in DIMS:
        t = constant_C(n)
        assert t.C == t.C0 + 1
        assert t.omega_prev == unit_ball_volume(n - 1)


def test_clamp_unit_logs_large_excursions(caplog):
    assert clamp_unit(1.0 + 1e-12) == 1.0
    assert not caplog.records
    assert clamp_unit(1.1) == 1.0
    assert caplog.records


@settings(max_examples=50)
@given(n=st.integers(2, 8), a=st.floats(0, math.pi), b=st.floats(0, math.pi))
def test_cap_area_monotone_property(n, a, b):
    lo, hi = min(a, b), max(a, b)
    assert cap_area(n, lo) <= cap_area(n, hi)
