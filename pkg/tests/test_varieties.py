import random

import pytest

from conftest import PARABOLOID, make_problem, poly, spec
from symdefect.chords import branch_data
from symdefect.ideals import IdealHandle, dimension, groebner
from symdefect.polycore import QQ, Polynomial, parse_polynomial
from symdefect.solve0d import residual, solve
from symdefect.varieties import (InadmissibleFormError, LinearForm, apply_H,
                                 check_general_position, check_strong_ci, choose_admissible_L,
                                 cone_at_infinity, degree_bounds, is_admissible, k0_closure,
                                 l_infinity, nonproperness_set, product_bound,
                                 random_linear_map_H, sing_phi, sing_phi_L, surplus_locus)
from symdefect.varieties import l_infinity_degree

Z3 = ("z1", "z2", "z3")


def principal_monic(ideal):
    gens = [g for g in groebner(ideal).elements]
    assert len(gens) == 1
    return gens[0].monic()


# ---- strong complete intersections

def test_paraboloid_is_strong_ci():
    r = check_strong_ci(spec(PARABOLOID))
    assert r.smooth and r.leading_form_dimension == 2 and r.passed
    assert not r.literal_reading_ok


def test_double_plane_is_not_smooth():
    r = check_strong_ci(spec("x1^2"))
    assert not r.smooth and not r.passed


def test_shared_leading_forms_fail_condition_two():
    v = ("x1", "x2", "x3", "x4", "x5")
    r = check_strong_ci(spec("x1 + x3^2", "x2 + x3^2", variables=v, n=3))
    assert r.smooth
    assert r.leading_form_dimension == 4
    assert not r.leading_forms_ok and not r.passed


# ---- cone at infinity and general position

def test_cone_of_pair_a_is_the_x3_axis(pair_a):
    cone = cone_at_infinity(pair_a.X, pair_a.Y)
    assert {g.monic() for g in cone.generators} == {poly("x1^2 + x2^2"), poly("x1^2 + 2*x2^2")}
    assert dimension(cone) == 1
    assert groebner(cone + poly("x3 - 1")).contains(poly("x1^2"))


def test_identical_cones_have_dimension_two():
    p = make_problem(PARABOLOID, PARABOLOID)
    assert dimension(cone_at_infinity(p.X, p.Y)) == 2
    assert not check_general_position(p)


def test_linear_cone(linear_pair):
    p = make_problem("x3", "x1")
    assert dimension(cone_at_infinity(p.X, p.Y)) == 1
    assert check_general_position(p)


def test_general_position_examples(pair_a):
    assert check_general_position(pair_a)
    assert not check_general_position(make_problem("x3", "x3 - 1"))


def test_admissible_forms(pair_a):
    assert is_admissible(pair_a, LinearForm((0, 0, 1)))
    assert not is_admissible(pair_a, LinearForm((1, 0, 0)))
    rng = random.Random(0)
    for _ in range(5):
        L = LinearForm((rng.randint(-10, 10), rng.randint(-10, 10), rng.randint(1, 10)))
        assert is_admissible(pair_a, L)
    for seed in range(5):
        L = choose_admissible_L(pair_a, seed=seed)
        cone = cone_at_infinity(pair_a.X, pair_a.Y)
        assert dimension(cone + L.polynomial(pair_a.x_vars)) <= 0


def test_no_admissible_form_without_general_position():
    p = make_problem("x3", "x3 - 1")
    with pytest.raises(InadmissibleFormError):
        choose_admissible_L(p, retries=5)


# ---- critical loci

def test_sing_phi_contains_tangent_coincidence(pair_a):
    # X and Y both have horizontal tangent planes at x = (0,0,0), y = (0,0,-1)
    ideal = sing_phi(pair_a)
    pt = [0, 0, 0, 0, 0, -1]
    assert all(g.evaluate(pt) == 0 for g in ideal.generators)
    assert pair_a.f_source()[0] in ideal.generators
    assert pair_a.g_source()[0] in ideal.generators


def test_linear_pair_is_a_submersion(linear_pair):
    assert groebner(sing_phi(linear_pair)).is_unit()
    L = linear_pair.with_L(choose_admissible_L(linear_pair))
    assert groebner(sing_phi_L(L)).is_unit()
    assert groebner(surplus_locus(L)).is_unit()


def test_sing_phi_L_contains_branch_points(pair_a):
    rep = branch_data(pair_a, (0, 0, 0))
    ideal = sing_phi_L(pair_a)
    for pt in rep.branch_points.points:
        x = list(pt.coordinates)
        full = x + [-c for c in x]
        assert max(residual(g, full) for g in ideal.generators) <= 1e-8


def test_surplus_locus_has_dimension_2n_minus_1(pair_a):
    S = surplus_locus(pair_a)
    assert dimension(S) == 3
    gb = groebner(S)
    minors = sing_phi(pair_a).generators[2:]
    assert any(not gb.contains(m) for m in minors)


def test_sing_phi_points_lie_in_sing_phi_L(pair_a):
    ideal = sing_phi(pair_a)
    ring = ideal.variables
    rng = random.Random(1)
    for _ in range(3):
        # slice the 3-dimensional critical set down to points
        slices = [Polynomial.linear(ring, [rng.randint(-3, 3) for _ in ring], rng.randint(-5, 5))
                  for _ in range(dimension(ideal))]
        pts = solve(ideal + slices).points
        assert pts
        for pt in pts:
            assert max(residual(g, pt.coordinates) for g in sing_phi_L(pair_a).generators) <= 1e-8


# ---- K0 closure

def test_k0_closure_pair_a(pair_a):
    expected = parse_polynomial("z3 - z1^2 - 4/3*z2^2 + 1/2", Z3).monic()
    assert principal_monic(k0_closure(pair_a)) == expected


def test_k0_closure_pair_b(pair_b):
    expected = parse_polynomial("z3 - 4/3*z1^2 - 3/2*z2^2 + 1/2", Z3).monic()
    assert principal_monic(k0_closure(pair_b)) == expected


def test_k0_closure_linear(linear_pair):
    assert groebner(k0_closure(linear_pair)).is_unit()


# ---- non-properness

def test_identity_map_is_proper():
    v = ("x", "y")
    out = nonproperness_set(IdealHandle([], v), [parse_polynomial("x", v), parse_polynomial("y", v)])
    assert groebner(out).is_unit()


def test_nonproper_locus_of_x_xy():
    v = ("x", "y")
    out = nonproperness_set(IdealHandle([], v), [parse_polynomial("x", v), parse_polynomial("x*y", v)])
    gens = groebner(out).elements
    assert len(gens) == 1
    assert gens[0].monic() == parse_polynomial("z1", out.variables)


def test_parabola_projection_is_proper():
    v = ("x", "y")
    out = nonproperness_set(IdealHandle([parse_polynomial("y - x^2", v)], v), [parse_polynomial("x", v)])
    assert groebner(out).is_unit()


def test_l_infinity_linear_is_empty(linear_pair):
    L = linear_pair.with_L(choose_admissible_L(linear_pair))
    assert groebner(l_infinity(L)).is_unit()


def test_l_infinity_pair_a_respects_bound(pair_a):
    deg, empty = l_infinity_degree(pair_a)
    report = degree_bounds(pair_a, deg_l_infinity=deg, l_infinity_empty=empty)
    assert report.product_bound == 7
    assert report.consistent()


# ---- degree bounds

def test_product_bound_examples():
    assert product_bound((2,), (2,)) == 7
    assert product_bound((1,), (1,)) == -1
    assert product_bound((2,), (3,)) == 17


def test_linear_bound_forces_emptiness(linear_pair):
    report = degree_bounds(linear_pair)
    assert report.empty_forced
    assert report.as_dict()["product_bound"] == -1


def test_refined_bound():
    p = make_problem(PARABOLOID, "x3 - x1^2 - 2*x2^2 + 1")
    r = degree_bounds(p, D=8, d=4, mu=0, deg_l_infinity=3, l_infinity_empty=False)
    assert r.refined_bound == 12 and r.bound() == 7 and r.consistent()
    r = degree_bounds(p, D=1, d=1, mu=0, deg_l_infinity=3, l_infinity_empty=False)
    assert r.bound() == 2 and not r.consistent()


# ---- linear changes of coordinates

def test_identity_H_leaves_Y_unchanged():
    Y = spec(PARABOLOID)
    H = tuple(tuple(QQ(int(i == j)) for j in range(3)) for i in range(3))
    assert apply_H(Y, H).equations == Y.equations


def test_diagonal_H():
    Y = spec(PARABOLOID)
    H = ((1, 0, 0), (0, 1, 0), (0, 0, 2))
    assert apply_H(Y, H).equations[0] == poly("1/2*x3 - x1^2 - x2^2")


def test_random_H_restores_general_position():
    X = spec(PARABOLOID)
    ok = 0
    for seed in range(10):
        H = random_linear_map_H(seed, 3)
        p = make_problem(PARABOLOID, PARABOLOID)
        p = type(p)(X, apply_H(X, H))
        ok += check_general_position(p)
    assert ok >= 9
