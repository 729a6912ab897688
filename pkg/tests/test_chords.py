import math
import random

import numpy as np
import pytest

from conftest import PARABOLOID, make_problem, poly, spec
from symdefect.chords import (GridSpec, OnK0ClosureError, TransportError, branch_data,
                              draw_admissible_forms, euler_characteristic, fiber_ideal,
                              generic_h_experiment, geometric_degree, l_invariance_check,
                              mu_invariant, properness_probe, ramification_index_numeric,
                              scan, start_point, transport_fiber_point)
from symdefect.polycore import QQ
from symdefect.solve0d import residual
from symdefect.varieties import (MidpointProblem, VarietySpec, check_general_position,
                                 cone_at_infinity, dimension, is_admissible)
from symdefect.polycore import parse_polynomial


def test_fiber_ideal_examples(pair_a, linear_pair):
    assert fiber_ideal(pair_a, (0, 0, 0)).generators == (
        poly("x3 - x1^2 - x2^2"), poly("-x3 - x1^2 - 2*x2^2 + 1"))
    assert fiber_ideal(pair_a, (0, 0, QQ(1, 2))).generators[1] == poly("1 - x3 - x1^2 - 2*x2^2 + 1")
    gens = fiber_ideal(linear_pair, (1, 2, 3)).generators
    assert all(g.degree() == 1 for g in gens)


def test_geometric_degree_examples(pair_a, pair_b, linear_pair):
    assert geometric_degree(pair_a, (0, 0, 0)) == 4
    assert geometric_degree(linear_pair, (QQ(1, 3), 2, -1)) == 1
    assert geometric_degree(pair_b, (QQ(1, 7), QQ(-2, 5), QQ(3, 4))) == 4


def test_branch_data_pair_a(pair_a):
    rep = branch_data(pair_a, (0, 0, 0))
    r2, r3 = 1 / math.sqrt(2), 1 / math.sqrt(3)
    expected = [(-r2, 0, 0.5), (0, -r3, 1 / 3), (0, r3, 1 / 3), (r2, 0, 0.5)]
    got = [pt.coordinates for pt in rep.branch_points.points]
    for e in expected:
        assert any(max(abs(complex(a) - b) for a, b in zip(e, g)) < 1e-9 for g in got)
    assert sorted(round(c.real, 12) for c in rep.branch_values) == [round(1 / 3, 12), 0.5]
    assert all(abs(c.imag) < 1e-12 for c in rep.branch_values)
    assert rep.rho == [2, 2, 2, 2] and rep.r == 4 and rep.s == 2


def test_branch_data_linear_is_empty(linear_pair):
    rep = branch_data(linear_pair, (1, 1, 1))
    assert rep.r == 0 and rep.rho == []


def test_branch_data_on_k0(pair_a):
    rep = branch_data(pair_a, (0, 0, QQ(-1, 2)))
    assert rep.status == "on_K0_closure"


def test_euler_characteristic_examples(pair_a, pair_b):
    rep = euler_characteristic(pair_a, (0, 0, 0))
    assert (rep.d, rep.chi) == (4, 0)
    assert rep.chi == rep.d - sum(r - 1 for r in rep.rho)
    assert euler_characteristic(pair_b, (0, 0, 0)).chi == 0
    with pytest.raises(OnK0ClosureError) as info:
        euler_characteristic(pair_a, (0, 0, QQ(-1, 2)))
    assert info.value.residual == 0.0


def test_ramification_indices_match_local_sheet_counts(pair_a):
    rep = branch_data(pair_a, (0, 0, 0))
    for pt, rho in zip(rep.branch_points.points, rep.rho):
        assert ramification_index_numeric(pair_a, (0, 0, 0), pt.coordinates) == rho


def test_mu_invariant_examples(pair_a, pair_b, linear_pair):
    assert mu_invariant(pair_a, samples=5, seed=1) == 0
    assert mu_invariant(pair_b, samples=5, seed=2) == 0
    assert mu_invariant(linear_pair, samples=5, seed=3) == 1


def test_fiber_invariants(pair_b):
    rng = random.Random(6)
    ds = set()
    for _ in range(5):
        p = tuple(QQ(rng.randint(-255, 255), rng.randint(1, 255)) for _ in range(3))
        rep = euler_characteristic(pair_b, p)
        ds.add(rep.d)
        assert rep.d <= 4
        assert all(r >= 2 for r in rep.rho)
        assert rep.r <= sum(rep.rho)
        fib = fiber_ideal(pair_b, p)
        from symdefect.chords import critical_polynomial
        crit = critical_polynomial(pair_b, p)
        for pt in rep.branch_points.points:
            assert max(residual(g, pt.coordinates) for g in fib.generators + (crit,)) <= 1e-8
    assert len(ds) == 1


def test_l_invariance(pair_a, linear_pair):
    assert l_invariance_check(pair_a.with_L((1, 2, 3)), (0, 0, 0), seed=4)
    assert l_invariance_check(linear_pair, (1, 2, 3), seed=5)
    ok, reports = l_invariance_check(pair_a, (QQ(1, 5), QQ(-1, 3), QQ(2, 7)), trials=3,
                                     seed=9, return_reports=True)
    assert ok and len({str(r.L) for r in reports}) == 3


def test_drawn_forms_are_certified(pair_a):
    for L in draw_admissible_forms(pair_a, 10, seed=3):
        assert is_admissible(pair_a, L)


def test_transport_keeps_fiber_and_level(pair_a):
    z0 = start_point(pair_a, (0, 0, 0), seed=1)
    p1 = (0, 0, QQ(1, 10))
    res = transport_fiber_point(pair_a, (0, 0, 0), p1, z0, steps=100)
    x = list(res.end[:3])
    fib = fiber_ideal(pair_a, p1)
    assert max(abs(g.evaluate_complex(x)) for g in fib.generators) <= 1e-6
    assert abs(res.end[2] - z0[2]) <= 1e-6  # L = x3
    assert res.max_residual <= 1e-6 and res.max_L_drift <= 1e-6 and res.max_phi_error <= 1e-6


def test_transport_identity(pair_a):
    z0 = start_point(pair_a, (0, 0, 0), seed=2)
    res = transport_fiber_point(pair_a, (0, 0, 0), (0, 0, 0), z0, steps=10)
    assert np.max(np.abs(res.end - z0)) <= 1e-9


def test_transport_rejects_segment_through_k0(pair_a):
    z0 = start_point(pair_a, (0, 0, 0))
    with pytest.raises(TransportError):
        transport_fiber_point(pair_a, (0, 0, 0), (0, 0, -1), z0)


def test_transport_rejects_points_off_the_variety(pair_a):
    with pytest.raises(TransportError):
        transport_fiber_point(pair_a, (0, 0, 0), (0, 0, QQ(1, 10)), [1, 1, 1])


def test_scan_pair_a():
    p = make_problem(PARABOLOID, "x3 - x1^2 - 2*x2^2 + 1", L=(0, 0, 1))
    result = scan(p, GridSpec.parse("z3=-1:1:41", p.z_vars))
    assert result.generic_values() == [0]
    assert [c.values[0] for c in result.marked()] == [QQ(-1, 2)]
    assert result.jumps == []
    lines = result.to_csv().splitlines()
    assert lines[0] == "axis1,axis2,chi,status" and len(lines) == 42


def test_scan_linear_pair(linear_pair):
    result = scan(linear_pair, GridSpec.parse("z1=-1:1:5,z2=0:1:3", linear_pair.z_vars))
    assert result.generic_values() == [1] and not result.jumps and len(result.cells) == 15


def test_scan_pair_b_marks_near_k0(pair_b):
    result = scan(pair_b, GridSpec.parse("z1=-1:1:41", pair_b.z_vars))
    marked = [float(c.values[0]) for c in result.marked()]
    root = math.sqrt(3 / 8)
    assert marked == [-0.6, 0.6]
    assert all(abs(abs(m) - root) <= 0.025 for m in marked)
    assert result.generic_values() == [0]


def test_parallel_scan_matches_serial(pair_a):
    grid = GridSpec.parse("z3=-1:1:9", pair_a.z_vars)
    serial = scan(pair_a, grid)
    parallel = scan(pair_a, grid, workers=2)
    assert serial.to_csv() == parallel.to_csv()


def test_grid_parse_errors(pair_a):
    for bad in ("z3=-1:1", "w=0:1:3", "z1=0:1:3,z2=0:1:3,z3=0:1:3", "z1=0:1:0"):
        with pytest.raises(ValueError):
            GridSpec.parse(bad, pair_a.z_vars)


def test_generic_h_skips_identity():
    X = spec(PARABOLOID)
    identity = tuple(tuple(QQ(int(i == j)) for j in range(3)) for i in range(3))
    with pytest.raises(RuntimeError):
        generic_h_experiment(X, X, matrices=[identity])


def test_generic_h_pair_a_equal_mu():
    X, Y = spec(PARABOLOID), spec("x3 - x1^2 - 2*x2^2 + 1")
    trials = generic_h_experiment(X, Y, trials=2, seed=3, samples=3)
    mus = {t.mu for t in trials if t.status == "ok"}
    # a generic H turns the fiber into a smooth quartic space curve of genus 1
    # with 4 points at infinity: chi = 0 - 4
    assert mus == {-4}


def test_properness_probe(pair_a):
    for seq in properness_probe(pair_a, sequences=3, seed=2):
        assert seq.monotone
        assert seq.min_abs_L[-1] > 1e6
        assert all(b > a for a, b in zip(seq.min_norm, seq.min_norm[1:]))


def test_higher_dimension_warns():
    v = ("x1", "x2", "x3", "x4", "x5")
    X = VarietySpec(v, [parse_polynomial("x5", v), parse_polynomial("x4", v)], 2 + 1)
    Y = VarietySpec(v, [parse_polynomial("x5 - x1", v), parse_polynomial("x4 - x2", v)], 3)
    p = MidpointProblem(X, Y, None, 0)
    with pytest.warns(RuntimeWarning):
        rep = euler_characteristic(p, (1, 2, 3, 4, 5))
    assert rep.chi == 1
