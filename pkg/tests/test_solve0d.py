import math
import random

import pytest

from symdefect.ideals import IdealHandle
from symdefect.polycore import QQ, Polynomial, parse_polynomial
from symdefect.solve0d import (PositiveDimensionError, count_with_multiplicity, residual,
                               solve, squarefree_decomposition)


def I(texts, variables):
    return IdealHandle.parse(texts, variables)


def close(a, b, tol=1e-9):
    return all(abs(complex(x) - complex(y)) <= tol for x, y in zip(a, b))


def test_real_quadratic():
    sols = solve(I(["x^2 - 1"], ("x",)))
    assert [(round(p.coordinates[0].real), p.multiplicity) for p in sols.points] == [(-1, 1), (1, 1)]


def test_double_point():
    sols = solve(I(["x^2", "y - x"], ("x", "y")))
    assert len(sols.points) == 1
    assert sols.points[0].multiplicity == 2
    assert close(sols.points[0].coordinates, (0, 0))


def test_two_double_points():
    sols = solve(I(["2*x1^2 + 3*x2^2 - 1", "x1^2 + x2^2 - 1/2"], ("x1", "x2")))
    r = 1 / math.sqrt(2)
    assert [p.multiplicity for p in sols.points] == [2, 2]
    assert close(sols.points[0].coordinates, (-r, 0), 1e-7)
    assert close(sols.points[1].coordinates, (r, 0), 1e-7)
    assert sols.total_multiplicity == 4


def test_count_examples():
    assert count_with_multiplicity(I(["x^3 - x"], ("x",))) == 3
    assert count_with_multiplicity(I(["x^2"], ("x",))) == 2


def test_count_on_quadric_fiber_slice():
    v = ("x1", "x2", "x3")
    rng = random.Random(4)
    for _ in range(3):
        c = QQ(rng.randint(-50, 50), rng.randint(1, 9))
        ideal = I(["x3 - x1^2 - x2^2", "-x3 - x1^2 - 2*x2^2 + 1"], v)
        ideal = ideal + (Polynomial.variable(v, "x3") - c)
        assert count_with_multiplicity(ideal) == 4


def test_positive_dimension_is_rejected():
    with pytest.raises(PositiveDimensionError):
        solve(I(["x*y"], ("x", "y")))


def test_unit_ideal_has_no_points():
    assert solve(I(["x^2 + 1", "x"], ("x",))).points == ()


def test_univariate_multiplicity_conservation():
    rng = random.Random(9)
    for k in range(1, 7):
        terms = {(i,): QQ(rng.randint(-9, 9)) for i in range(k)}
        terms[(k,)] = QQ(rng.randint(1, 9))
        p = Polynomial(("x",), terms)
        assert count_with_multiplicity(IdealHandle([p], ("x",))) == k
        assert sum(pt.multiplicity for pt in solve(IdealHandle([p], ("x",))).points) == k


def test_residuals_and_agreement_on_random_systems():
    rng = random.Random(21)
    v = ("x", "y")
    for _ in range(8):
        gens = []
        for _ in range(2):
            terms = {(i, j): QQ(rng.randint(-5, 5)) for i in range(3) for j in range(3) if i + j <= 2}
            gens.append(Polynomial(v, terms))
        ideal = IdealHandle(gens, v)
        try:
            sols = solve(ideal)
        except PositiveDimensionError:
            continue
        for pt in sols.points:
            assert max(residual(g, pt.coordinates) for g in gens) <= 1e-8
        if all(pt.multiplicity == 1 for pt in sols.points):
            assert count_with_multiplicity(ideal) == len(sols.points)
            bumped = IdealHandle([gens[0] + QQ(1, 10**12), gens[1]], v)
            assert count_with_multiplicity(bumped) == len(sols.points)


def test_squarefree_decomposition_exponents():
    target = parse_polynomial("(x - 1)^2*(x + 2)^3", ("x",))
    coeffs = [target.terms.get((i,), QQ(0)) for i in range(6)]
    factors = squarefree_decomposition(coeffs)
    assert sorted(factors) == [2, 3]
    assert factors[2] == [-1, 1]
    assert factors[3] == [2, 1]


def test_csv_columns():
    sols = solve(I(["x^2 + 1"], ("x",)))
    lines = sols.to_csv().splitlines()
    assert lines[0] == "re_x,im_x,multiplicity"
    assert len(lines) == 3
