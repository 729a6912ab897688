"""Geometric constructions for the midpoint map of two complete intersections.

``X`` and ``Y`` are cut out in C^(2n-1) by ``n-1`` equations each; the
midpoint map sends ``(x, y)`` in ``X x Y`` to ``(x + y) / 2``.  Ideals of
critical loci live in the source ring ``(x, y)``; images live in the target
ring ``z``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .ideals import (Budget, IdealHandle, dimension, degree_of_variety, eliminate,
                     fresh_names, groebner, saturate, saturate_variable)
from .polycore import QQ, Polynomial, PolyMatrix, jacobian, to_rational

__all__ = [
    "VarietySpec",
    "StrongCIReport",
    "LinearForm",
    "MidpointProblem",
    "DegreeBoundReport",
    "InadmissibleFormError",
    "check_strong_ci",
    "cone_at_infinity",
    "check_general_position",
    "is_admissible",
    "choose_admissible_L",
    "sing_phi",
    "sing_phi_L",
    "surplus_locus",
    "k0_closure",
    "nonproperness_set",
    "l_infinity",
    "degree_bounds",
    "product_bound",
    "random_linear_map_H",
    "apply_H",
]


class InadmissibleFormError(ValueError):
    pass


@dataclass(frozen=True)
class VarietySpec:
    """Candidate strong complete intersection of dimension ``n`` in C^m."""

    variables: tuple
    equations: tuple
    n: int

    def __init__(self, variables: Sequence[str], equations: Sequence[Polynomial], n: int | None = None):
        variables = tuple(variables)
        eqs = tuple(e.in_ring(variables) for e in equations)
        m = len(variables)
        if n is None:
            n = m - len(eqs)
        if len(eqs) != m - n:
            raise ValueError(f"expected {m - n} equations for dimension {n} in C^{m}, got {len(eqs)}")
        if any(not e.terms for e in eqs):
            raise ValueError("defining equations must be nonzero")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "equations", eqs)
        object.__setattr__(self, "n", n)

    @property
    def m(self) -> int:
        return len(self.variables)

    @property
    def multi_degree(self) -> tuple:
        return tuple(int(e.degree()) for e in self.equations)

    def ideal(self) -> IdealHandle:
        return IdealHandle(self.equations, self.variables)


@dataclass(frozen=True)
class StrongCIReport:
    smooth: bool
    leading_form_dimension: int
    n: int
    m: int

    @property
    def leading_forms_ok(self) -> bool:
        """Leading-form variety has the expected dimension ``n``."""
        return self.leading_form_dimension == self.n

    @property
    def literal_reading_ok(self) -> bool:
        """The alternative reading that asks for dimension ``m - n``."""
        return self.leading_form_dimension == self.m - self.n

    @property
    def passed(self) -> bool:
        return self.smooth and self.leading_forms_ok


def check_strong_ci(spec: VarietySpec, budget: Budget | None = None) -> StrongCIReport:
    """Smoothness of ``{h = 0}`` and the dimension of the leading-form variety."""
    k = spec.m - spec.n
    jac = jacobian(spec.equations, spec.variables)
    minors = [p for p in jac.minors(k) if p.terms]
    smooth_ideal = IdealHandle(list(spec.equations) + minors, spec.variables)
    smooth = groebner(smooth_ideal, None, budget).is_unit()
    leading = IdealHandle([e.leading_form() for e in spec.equations], spec.variables)
    return StrongCIReport(smooth, dimension(leading, budget), spec.n, spec.m)


@dataclass(frozen=True)
class LinearForm:
    coefficients: tuple

    def __init__(self, coefficients):
        coeffs = tuple(to_rational(c) for c in coefficients)
        if not any(coeffs):
            raise ValueError("a linear form must not vanish identically")
        object.__setattr__(self, "coefficients", coeffs)

    def polynomial(self, variables) -> Polynomial:
        return Polynomial.linear(variables, self.coefficients)

    def __call__(self, point):
        return sum(c * v for c, v in zip(self.coefficients, point))

    def __str__(self):
        return ",".join(str(c) for c in self.coefficients)


@dataclass
class MidpointProblem:
    X: VarietySpec
    Y: VarietySpec
    L: LinearForm | None = None
    seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.X.variables != self.Y.variables:
            raise ValueError("X and Y must share the ambient variables")
        if self.X.n != self.Y.n:
            raise ValueError("X and Y must have the same dimension")
        if self.X.m != 2 * self.X.n - 1:
            raise ValueError(f"ambient dimension must be 2n-1 = {2 * self.X.n - 1}")
        if self.L is not None and len(self.L.coefficients) != self.X.m:
            raise ValueError("linear form has the wrong number of coefficients")

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def m(self) -> int:
        return self.X.m

    @property
    def x_vars(self) -> tuple:
        return self.X.variables

    @property
    def y_vars(self) -> tuple:
        return tuple(fresh_names("y", self.m, self.x_vars))

    @property
    def z_vars(self) -> tuple:
        return tuple(fresh_names("z", self.m, self.x_vars + self.y_vars))

    @property
    def source_vars(self) -> tuple:
        return self.x_vars + self.y_vars

    def with_L(self, L) -> "MidpointProblem":
        if not isinstance(L, LinearForm):
            L = LinearForm(L)
        # cache keys that depend on L carry it, so the cache can be shared
        return MidpointProblem(self.X, self.Y, L, self.seed, self._cache)

    def f_source(self):
        return [e.in_ring(self.source_vars) for e in self.X.equations]

    def g_source(self):
        ren = dict(zip(self.x_vars, (Polynomial.variable(self.source_vars, v) for v in self.y_vars)))
        return [e.substitute(ren, ring=self.source_vars) for e in self.Y.equations]

    def L_polynomial(self, ring=None) -> Polynomial:
        if self.L is None:
            raise InadmissibleFormError("no linear form chosen")
        return self.L.polynomial(self.x_vars).in_ring(ring or self.x_vars)

    def cached(self, name, compute):
        if name not in self._cache:
            self._cache[name] = compute()
        return self._cache[name]


def cone_at_infinity(X: VarietySpec, Y: VarietySpec) -> IdealHandle:
    """Ideal of all leading forms of the equations of ``X`` and ``Y``."""
    forms = [e.leading_form() for e in X.equations] + [e.leading_form() for e in Y.equations]
    return IdealHandle(forms, X.variables)


def check_general_position(problem: MidpointProblem, budget: Budget | None = None) -> bool:
    return dimension(cone_at_infinity(problem.X, problem.Y), budget) == 1


def is_admissible(problem: MidpointProblem, L: LinearForm, budget: Budget | None = None) -> bool:
    """Certificate: the cone at infinity meets ``{L = 0}`` only at the origin."""
    cone = cone_at_infinity(problem.X, problem.Y)
    return dimension(cone + L.polynomial(problem.x_vars), budget) <= 0


def choose_admissible_L(problem: MidpointProblem, seed: int | None = None,
                        budget: Budget | None = None, retries: int = 20) -> LinearForm:
    rng = random.Random(problem.seed if seed is None else seed)
    for _ in range(retries):
        coeffs = [rng.randint(-10, 10) for _ in range(problem.m)]
        if not any(coeffs):
            continue
        L = LinearForm(coeffs)
        if is_admissible(problem, L, budget):
            return L
    raise InadmissibleFormError(
        f"no admissible linear form found in {retries} draws; "
        "check general position (the cone at infinity may be too large)")


def _stacked_matrix(problem: MidpointProblem, with_L: bool) -> PolyMatrix:
    ring = problem.source_vars
    m = problem.m
    zero = Polynomial(ring)
    half = Polynomial.constant(ring, QQ(1, 2))
    rows = []
    for f in problem.f_source():
        rows.append([f.diff(v) for v in problem.x_vars] + [zero] * m)
    for g in problem.g_source():
        rows.append([zero] * m + [g.diff(v) for v in problem.y_vars])
    for i in range(m):
        rows.append([half if j == i else zero for j in range(m)]
                    + [half if j == i else zero for j in range(m)])
    if with_L:
        Lp = problem.L_polynomial(ring)
        rows.append([Lp.diff(v) for v in problem.x_vars] + [zero] * m)
    return PolyMatrix(rows)


def _dedupe(polys):
    seen = set()
    out = []
    for p in polys:
        if not p.terms:
            continue
        key = p.scale_to_integer()
        if key in seen:
            continue
        seen.add(key)
        out.append(key)
    return out


def sing_phi(problem: MidpointProblem) -> IdealHandle:
    """Critical points of the midpoint map on ``X x Y`` (maximal minors of the stacked Jacobian)."""
    def compute():
        M = _stacked_matrix(problem, with_L=False)
        minors = _dedupe(M.maximal_minors())
        return IdealHandle(problem.f_source() + problem.g_source() + minors, problem.source_vars)
    return problem.cached("sing_phi", compute)


def sing_phi_L(problem: MidpointProblem) -> IdealHandle:
    """Critical points of ``(Phi, L)`` on ``X x Y``."""
    def compute():
        M = _stacked_matrix(problem, with_L=True)
        det = M.determinant()
        gens = problem.f_source() + problem.g_source() + _dedupe([det])
        return IdealHandle(gens, problem.source_vars)
    return problem.cached(("sing_phi_L", problem.L), compute)


def surplus_locus(problem: MidpointProblem, budget: Budget | None = None) -> IdealHandle:
    """Ideal of the closure of ``Sing(Phi, L) \\ Sing(Phi)``."""
    return problem.cached(
        ("surplus", problem.L),
        lambda: saturate(sing_phi_L(problem), sing_phi(problem), budget))


def _graph_equations(problem: MidpointProblem):
    ring = problem.source_vars + problem.z_vars
    eqs = []
    for xv, yv, zv in zip(problem.x_vars, problem.y_vars, problem.z_vars):
        eqs.append(Polynomial.variable(ring, zv)
                   - QQ(1, 2) * (Polynomial.variable(ring, xv) + Polynomial.variable(ring, yv)))
    return ring, eqs


def k0_closure(problem: MidpointProblem, budget: Budget | None = None) -> IdealHandle:
    """Ideal (in the target variables) of the closure of the critical values."""
    def compute():
        ring, graph = _graph_equations(problem)
        ideal = IdealHandle([g.in_ring(ring) for g in sing_phi(problem).generators] + graph, ring)
        out = eliminate(ideal, problem.source_vars, budget)
        return _tidy(out, budget)
    return problem.cached("k0", compute)


def _tidy(ideal: IdealHandle, budget=None) -> IdealHandle:
    gb = groebner(ideal, None, budget)
    if gb.is_unit():
        return IdealHandle([Polynomial.constant(ideal.variables, 1)], ideal.variables)
    gens = [g.scale_to_integer() for g in gb.elements]
    return IdealHandle(gens or [Polynomial(ideal.variables)], ideal.variables)


def nonproperness_set(variety: IdealHandle, mapping: Sequence[Polynomial],
                      target_vars: Sequence[str] | None = None,
                      budget: Budget | None = None, seed: int = 0) -> IdealHandle:
    """Points over which ``mapping`` restricted to V(variety) fails to be proper.

    The graph of the map is closed up at infinity in the source directions
    (homogenise the source with ``t``), the part with ``t = 0`` is kept and
    projected to the target.  The source hyperplane at infinity is covered by
    one generic affine chart ``ell = 1``; limit points in the complement of
    the chart lie in the closure of the chart part.
    """
    source = variety.variables
    mapping = [p.in_ring(source) for p in mapping]
    if target_vars is None:
        target_vars = fresh_names("z", len(mapping), source)
    target_vars = tuple(target_vars)
    t_name = fresh_names("t", 1, source + target_vars)[0]
    ring = (t_name,) + source + target_vars
    t = Polynomial.variable(ring, t_name)

    def homogenize(p: Polynomial) -> Polynomial:
        # grading: source variables weight 1, target variables weight 0
        k = len(source)
        deg = max(sum(m[:k]) for m in p.terms)
        terms = {}
        for m, c in p.terms.items():
            d = sum(m[:k])
            terms[(deg - d,) + m] = c
        return Polynomial(ring, terms)

    graph = [g.in_ring(source + target_vars) for g in variety.nonzero()]
    graph += [Polynomial.variable(source + target_vars, z) - p.in_ring(source + target_vars)
              for z, p in zip(target_vars, mapping)]
    hom = [homogenize(g) for g in graph if g.terms]
    rng = random.Random(seed)
    coeffs = [rng.randint(-10, 10) or 1 for _ in source]
    chart = Polynomial.linear(ring, [0] + coeffs + [0] * len(target_vars), -1)
    closure = saturate_variable(IdealHandle(hom + [chart], ring), t_name, budget)
    closure = closure.in_ring(ring) if closure.variables != ring else closure
    at_infinity = closure + t
    out = eliminate(at_infinity, (t_name,) + source, budget)
    return _tidy(out.in_ring(target_vars), budget)


def l_infinity(problem: MidpointProblem, budget: Budget | None = None) -> IdealHandle:
    """Non-properness set of the midpoint map restricted to the surplus locus."""
    def compute():
        S = surplus_locus(problem, budget)
        if groebner(S, None, budget).is_unit():
            return IdealHandle([Polynomial.constant(problem.z_vars, 1)], problem.z_vars)
        ring = problem.source_vars
        phi = [QQ(1, 2) * (Polynomial.variable(ring, xv) + Polynomial.variable(ring, yv))
               for xv, yv in zip(problem.x_vars, problem.y_vars)]
        return nonproperness_set(S, phi, problem.z_vars, budget, seed=problem.seed)
    return problem.cached(("l_inf", problem.L), compute)


def product_bound(a: Sequence[int], b: Sequence[int]) -> int:
    """``prod(a) * prod(b) * sum(a_i + b_i - 2) - 1``."""
    pa = 1
    for v in a:
        pa *= v
    pb = 1
    for v in b:
        pb *= v
    return pa * pb * sum(x + y - 2 for x, y in zip(a, b)) - 1


@dataclass
class DegreeBoundReport:
    a: tuple
    b: tuple
    product_bound: int
    D: int | None = None
    d: int | None = None
    mu_XY: int | None = None
    deg_L_infinity: int | None = None
    l_infinity_empty: bool | None = None

    @property
    def refined_bound(self):
        if None in (self.D, self.d, self.mu_XY):
            return None
        return self.D + self.d - self.mu_XY

    @property
    def empty_forced(self) -> bool:
        return self.product_bound < 0

    def bound(self):
        refined = self.refined_bound
        return self.product_bound if refined is None else min(self.product_bound, refined)

    def consistent(self) -> bool:
        if self.l_infinity_empty:
            return True
        if self.empty_forced:
            return False
        if self.deg_L_infinity is None:
            return True
        return self.deg_L_infinity <= self.bound()

    def as_dict(self):
        return {
            "a": list(self.a),
            "b": list(self.b),
            "product_bound": self.product_bound,
            "D": self.D,
            "d": self.d,
            "mu_XY": self.mu_XY,
            "refined_bound": self.refined_bound,
            "deg_L_infinity": self.deg_L_infinity,
            "l_infinity_empty": self.l_infinity_empty,
            "consistent": self.consistent(),
        }


def degree_bounds(problem: MidpointProblem, D=None, d=None, mu=None,
                  deg_l_infinity=None, l_infinity_empty=None) -> DegreeBoundReport:
    a = problem.X.multi_degree
    b = problem.Y.multi_degree
    return DegreeBoundReport(a, b, product_bound(a, b), D, d, mu, deg_l_infinity, l_infinity_empty)


def surplus_degree(problem: MidpointProblem, budget: Budget | None = None) -> int | None:
    S = surplus_locus(problem, budget)
    if groebner(S, None, budget).is_unit():
        return 0
    return degree_of_variety(S, seed=problem.seed, budget=budget)


def l_infinity_degree(problem: MidpointProblem, budget: Budget | None = None):
    """``(degree, empty)`` of L-infinity; degree is None unless it is a hypersurface."""
    ideal = l_infinity(problem, budget)
    dim = dimension(ideal, budget)
    if dim < 0:
        return 0, True
    if dim == problem.m - 1:
        return degree_of_variety(ideal, seed=problem.seed, budget=budget), False
    return None, False


# ---------------------------------------------------------------- generic linear maps

def _det_exact(M):
    M = [list(r) for r in M]
    n = len(M)
    det = QQ(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c]), None)
        if p is None:
            return QQ(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


def _inverse_exact(M):
    n = len(M)
    A = [list(r) + [QQ(1) if i == j else QQ(0) for j in range(n)] for i, r in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c])
        A[c], A[p] = A[p], A[c]
        pv = A[c][c]
        A[c] = [v / pv for v in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return [row[n:] for row in A]


def random_linear_map_H(seed: int, m: int, lo: int = -5, hi: int = 5, redraws: int = 10):
    """Random invertible integer matrix, re-drawn while singular."""
    rng = random.Random(seed)
    for _ in range(redraws):
        H = [[QQ(rng.randint(lo, hi)) for _ in range(m)] for _ in range(m)]
        if _det_exact(H):
            return tuple(tuple(r) for r in H)
    raise RuntimeError(f"no invertible matrix in {redraws} draws")


def apply_H(Y: VarietySpec, H) -> VarietySpec:
    """Equations of ``H(Y)``: each ``g`` becomes ``g o H^-1``."""
    H = [[to_rational(v) for v in row] for row in H]
    if not _det_exact(H):
        raise ValueError("H is singular")
    Hinv = _inverse_exact(H)
    ring = Y.variables
    images = {}
    for i, v in enumerate(ring):
        images[v] = Polynomial.linear(ring, Hinv[i])
    return VarietySpec(ring, [g.substitute(images) for g in Y.equations], Y.n)
