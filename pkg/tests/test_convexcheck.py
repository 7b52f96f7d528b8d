from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodiam import constructions as co
from isodiam import convexcheck as cc
from isodiam import profiles as pr
from isodiam.geomcore import sphere_area, unit_ball_volume

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
TETRA = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(8)


def test_square():
    F = cc.polygon_body(SQUARE)
    assert cc.perimeter(F) == pytest.approx(4.0, abs=1e-14)
    assert cc.body_volume(F) == pytest.approx(1.0, abs=1e-14)
    assert cc.diameter(F) == pytest.approx(math.sqrt(2), abs=1e-14)
    assert cc.delta_prime(F) == pytest.approx(2 / math.sqrt(math.pi) - 1, abs=1e-14)


def test_regular_tetrahedron_unit_edge():
    F = cc.convex_hull(TETRA)
    assert cc.perimeter(F) == pytest.approx(math.sqrt(3), abs=1e-14)
    assert cc.body_volume(F) == pytest.approx(1 / (6 * math.sqrt(2)), abs=1e-14)
    assert cc.diameter(F) == pytest.approx(1.0, abs=1e-14)


def test_interior_points_do_not_change_hull():
    tri = np.array([[0, 0], [2, 0], [0, 2]], dtype=float)
    rng = np.random.default_rng(0)
    w = rng.dirichlet([1, 1, 1], 50)
    F = cc.convex_hull(np.concatenate([tri, w @ tri]))
    assert len(F.vertices) == 3
    assert cc.perimeter(F) == pytest.approx(4 + 2 * math.sqrt(2), abs=1e-13)


def test_degenerate_inputs_rejected():
    with pytest.raises(cc.ConvexError):
        cc.convex_hull([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(cc.ConvexError):
        cc.convex_hull([[0, 0], [1, 0]])
    with pytest.raises(cc.ConvexError):
        cc.convex_hull(np.zeros((5, 4)))
    with pytest.raises(cc.ConvexError):
        cc.convex_hull(SQUARE, n=3)


@pytest.mark.parametrize("F", [cc.polygon_body(SQUARE), cc.convex_hull(TETRA)], ids=["square", "tetra"])
def test_cauchy_within_three_se(F):
    est, se = cc.cauchy_perimeter(F, 100_000, seed=1)
    assert abs(est - cc.perimeter(F)) <= 3 * se


def test_cauchy_many_gon():
    th = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    F = cc.polygon_body(np.stack([np.cos(th), np.sin(th)], axis=1))
    est, _ = cc.cauchy_perimeter(F, 20_000)
    assert est == pytest.approx(2 * math.pi, rel=0.01)


def test_cauchy_unbiased_over_seeds():
    F = cc.convex_hull(TETRA)
    runs = [cc.cauchy_perimeter(F, 5000, seed=s) for s in range(20)]
    mean = np.mean([r[0] for r in runs])
    se = np.sqrt(np.sum([r[1] ** 2 for r in runs])) / 20
    assert abs(mean - math.sqrt(3)) <= 3 * se


@pytest.mark.parametrize("F", [cc.polygon_body(SQUARE), cc.convex_hull(TETRA)], ids=["square", "tetra"])
def test_facet_formula_matches_direct_projection(F):
    rng = np.random.default_rng(4)
    nus = rng.standard_normal((200, F.n))
    nus /= np.linalg.norm(nus, axis=1, keepdims=True)
    assert np.allclose(cc._facet_projection(F, nus), cc.projected_measure(F, nus), atol=1e-12)


def test_cauchy_rejects_few_directions():
    with pytest.raises(cc.ConvexError):
        cc.cauchy_perimeter(cc.polygon_body(SQUARE), 10)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_ball_hull(n):
    H = cc.hull_of_profile(pr.ball_profile(n))
    assert cc.perimeter(H) == pytest.approx(sphere_area(n), rel=1e-7)
    assert cc.body_volume(H) == pytest.approx(unit_ball_volume(n), rel=1e-7)
    assert cc.diameter(H) == pytest.approx(2.0, abs=1e-9)
    assert abs(cc.delta_prime(H)) < 1e-7


def test_revolution_cylinder_closed_forms():
    C = cc.Revolution(3, np.array([0.0, 2.0]), np.array([1.0, 1.0]))
    assert cc.body_volume(C) == pytest.approx(2 * math.pi, abs=1e-14)
    assert cc.perimeter(C) == pytest.approx(6 * math.pi, abs=1e-14)
    assert cc.diameter(C) == pytest.approx(math.sqrt(8), abs=1e-14)


def test_revolution_cone_closed_forms():
    K = cc.Revolution(3, np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert cc.body_volume(K) == pytest.approx(math.pi / 3, abs=1e-14)
    assert cc.perimeter(K) == pytest.approx(math.pi * (1 + math.sqrt(2)), abs=1e-14)


def test_revolution_validation():
    with pytest.raises(cc.ConvexError):
        cc.Revolution(3, np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(cc.ConvexError):
        cc.Revolution(3, np.array([0.0, 1.0]), np.array([-1.0, 1.0]))


def _outside_distance(H, rho, z):
    # Euclidean distance in the meridian plane from (z, rho) to the hull's upper chain,
    # zero for points inside; contains(tol) measures slack along rho only, which
    # inflates sub-nanometre gaps where the boundary is nearly flat
    inside = H.contains(np.stack([rho, np.zeros_like(rho), z], axis=1))
    a = np.stack([H.z[:-1], H.rho[:-1]], axis=1)
    b = np.stack([H.z[1:], H.rho[1:]], axis=1)
    out = np.zeros(rho.size)
    for i in np.flatnonzero(~inside):
        q = np.array([z[i], rho[i]])
        ab = b - a
        s = np.clip(np.einsum("ij,ij->i", q - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        out[i] = np.min(np.linalg.norm(a + s[:, None] * ab - q, axis=1))
    return out


@pytest.mark.parametrize("n", [2, 3])
def test_hull_contains_boundary_points(n):
    rng = np.random.default_rng(7 + n)
    P = pr.normalized(pr.random_profile(n, rng))[0]
    H = cc.hull_of_profile(P)
    b = pr.meridian_boundary(P, 2e-3)
    pick = rng.choice(len(b), min(1000, len(b)), replace=False)
    # the meridian is inscribed with chord error about spacing^2 / 8 ~ 1e-9
    assert np.max(_outside_distance(H, b[pick, 0], b[pick, 1])) <= 1e-9


def test_hull_contains_profile_membership_samples():
    rng = np.random.default_rng(3)
    P = pr.normalized(pr.random_profile(3, rng))[0]
    H = cc.hull_of_profile(P)
    x = rng.uniform(-P.r_max, P.r_max, (20_000, 3))
    inside = P.contains(x)
    assert np.all(H.contains(x[inside], tol=1e-8))


@pytest.mark.parametrize("seed", range(5))
def test_perimeter_bound_random_polytopes(seed):
    rng = np.random.default_rng(seed)
    for n in (2, 3):
        F = cc.random_polytope(n, rng)
        assert cc.diameter(F) == pytest.approx(2.0, abs=1e-12)
        assert cc.check_perimeter_bound(F) >= -1e-6


def test_perimeter_bound_thin_body():
    F = cc.polygon_body([[-1, 0], [1, 0], [1, 0.01], [-1, 0.01]])
    assert cc.check_perimeter_bound(F) > 0


def test_reuleaux_perimeter_bound_is_tight():
    # constant width d has perimeter pi d, equal to that of the disk of the same diameter
    margins = []
    for m in (256, 4096):
        F = cc.polygon_body(co.reuleaux(3, 2.0).boundary(m))
        margins.append(cc.check_perimeter_bound(F))
    assert 0 < margins[1] < margins[0]
    assert margins[1] < 1e-4


def test_deficit_lemma_on_families():
    for P in (co.ball_minus_ball(3, 0.3, 0.35), co.build_E(co.family_n2(1 / 32)),
              co.build_E(co.family_high_n(1 / 64, 0.01, 4))):
        delta, dp = cc.check_deficit_lemma(P)
        assert dp <= delta + 1e-8


def test_deficit_lemma_isoperimetric_chain():
    # delta' >= 0 (isoperimetric) and delta' <= delta
    rng = np.random.default_rng(21)
    for n in (2, 3, 4):
        P = pr.random_profile(n, rng)
        delta, dp = cc.check_deficit_lemma(P)
        assert -1e-9 <= dp <= delta + 1e-8


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(0.1, 10.0), seed=st.integers(0, 1000))
def test_delta_prime_scale_invariant(lam, seed):
    F = cc.random_polytope(2 + seed % 2, np.random.default_rng(seed), (10, 40))
    assert cc.delta_prime(F.scaled(lam)) == pytest.approx(cc.delta_prime(F), abs=1e-12)


def test_convex_report_fields():
    rep = cc.convex_report(cc.polygon_body(SQUARE))
    assert rep.t_F == pytest.approx(1 / math.sqrt(math.pi), abs=1e-14)
    assert set(rep.as_dict()) == {"perimeter", "volume", "diameter", "delta_prime", "t_F"}
