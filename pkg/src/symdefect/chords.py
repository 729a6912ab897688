"""Chord fibers of the midpoint map: degrees, branch data and Euler characteristics.

For a target point ``p`` the fiber of the midpoint map is identified with the
curve ``{x : f(x) = 0, g(2p - x) = 0}``.  Its Euler characteristic follows
from the ramification of the admissible linear form ``L`` on that curve::

    chi = d - sum(rho_i - 1)

where ``d`` is the number of points of the curve on a generic level set of
``L`` and ``rho_i`` are the ramification indices at the critical points.
"""

from __future__ import annotations

import csv
import io
import math
import random
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ideals import (DEFAULT_STEPS, Budget, BudgetExceeded, IdealHandle, SliceDisagreementError,
                     fresh_names, groebner)
from .polycore import QQ, Polynomial, evaluate_complex, jacobian, to_rational
from .solve0d import (PositiveDimensionError, SolutionSet, aberth_roots,
                      count_with_multiplicity, residual, solve)
from .varieties import (LinearForm, MidpointProblem, VarietySpec, apply_H,
                        check_general_position, check_strong_ci, choose_admissible_L,
                        k0_closure, l_infinity, random_linear_map_H)

__all__ = [
    "ChordFiberReport",
    "ScanResult",
    "GridSpec",
    "OnK0ClosureError",
    "MuDisagreementError",
    "TransportError",
    "fiber_ideal",
    "critical_polynomial",
    "geometric_degree",
    "branch_data",
    "euler_characteristic",
    "mu_invariant",
    "l_invariance_check",
    "transport_fiber_point",
    "scan",
    "generic_h_experiment",
    "properness_probe",
    "ramification_index_numeric",
    "ideal_residual",
]

GENERIC_REJECT_RESIDUAL = 1e-4
K0_RESIDUAL = 1e-8
K0_SECONDS = 20.0


class OnK0ClosureError(ValueError):
    """The target point lies on (the closure of) the critical values."""

    def __init__(self, message, residual=0.0):
        super().__init__(message)
        self.residual = residual


class MuDisagreementError(RuntimeError):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or []


class TransportError(RuntimeError):
    pass


def _rational_point(p):
    out = []
    for v in p:
        if isinstance(v, float):
            v = Fraction(v)
        out.append(to_rational(v))
    return tuple(out)


def ideal_residual(ideal: IdealHandle, point) -> float:
    """Largest normalised generator residual at ``point`` (0 means on the variety)."""
    gens = ideal.nonzero()
    if not gens:
        return 0.0
    if any(g.is_constant() for g in gens):
        return math.inf
    return max(residual(g, [complex(float(v.real), float(v.imag)) if isinstance(v, complex)
                            else float(v) for v in point]) for g in gens)


def _exactly_on(ideal: IdealHandle, p) -> bool:
    gens = ideal.nonzero()
    if any(g.is_constant() for g in gens):
        return False
    return all(g.evaluate(p) == 0 for g in gens)


# ---------------------------------------------------------------- fiber curves

def fiber_ideal(problem: MidpointProblem, p) -> IdealHandle:
    """``(f(x), g(2p - x))`` in the ``x`` variables."""
    p = _rational_point(p)
    ring = problem.x_vars
    reflect = {v: Polynomial.constant(ring, 2 * c) - Polynomial.variable(ring, v)
               for v, c in zip(ring, p)}
    gens = list(problem.X.equations) + [g.substitute(reflect) for g in problem.Y.equations]
    return IdealHandle(gens, ring)


def critical_polynomial(problem: MidpointProblem, p) -> Polynomial:
    """Determinant of the Jacobian of ``(f(x), g(2p - x), L(x))``."""
    fib = fiber_ideal(problem, p)
    system = list(fib.generators) + [problem.L_polynomial()]
    return jacobian(system, problem.x_vars).determinant()


def _fiber_is_smooth(problem, p, budget=None) -> bool:
    fib = fiber_ideal(problem, p)
    k = len(fib.generators)
    minors = [q for q in jacobian(list(fib.generators), problem.x_vars).minors(k) if q.terms]
    return groebner(fib + minors, None, budget).is_unit()


def _require_L(problem, budget=None):
    if problem.L is None:
        return problem.with_L(choose_admissible_L(problem, budget=budget))
    return problem


def geometric_degree(problem: MidpointProblem, p, trials: int = 3, seed: int = 0,
                     budget: Budget | None = None) -> int:
    """Points of the fiber curve on generic level sets of ``L`` (majority of ``trials``)."""
    problem = _require_L(problem, budget)
    fib = fiber_ideal(problem, p)
    Lp = problem.L_polynomial()
    rng = random.Random(seed)
    counts = []
    for _ in range(trials):
        c = QQ(rng.randint(-1000, 1000), rng.randint(1, 97))
        counts.append(count_with_multiplicity(fib + (Lp - c), budget))
    value, freq = Counter(counts).most_common(1)[0]
    if freq == trials:
        return value
    if freq * 2 > trials:
        warnings.warn(f"level-set counts disagree at p={p}: {counts}", stacklevel=2)
        return value
    raise SliceDisagreementError(f"level-set counts disagree at p={p}: {counts}")


@dataclass
class ChordFiberReport:
    p: tuple
    L: LinearForm | None
    d: int | None = None
    branch_points: SolutionSet | None = None
    branch_values: list = field(default_factory=list)
    rho: list = field(default_factory=list)
    chi: int | None = None
    status: str = "generic"
    message: str = ""

    @property
    def r(self) -> int:
        return len(self.rho)

    @property
    def s(self) -> int:
        return len(self.branch_values)

    def riemann_hurwitz(self) -> int:
        return self.d - sum(rho - 1 for rho in self.rho)

    def as_dict(self):
        out = {
            "p": [str(v) for v in self.p],
            "L": [str(c) for c in self.L.coefficients] if self.L else None,
            "d": self.d,
            "r": self.r,
            "rho": list(self.rho),
            "delta": [[float(c.real), float(c.imag)] for c in self.branch_values],
            "chi": self.chi,
            "status": self.status,
        }
        if self.branch_points is not None:
            out["branch_points"] = [
                {"coordinates": [[float(z.real), float(z.imag)] for z in pt.coordinates],
                 "multiplicity": pt.multiplicity}
                for pt in self.branch_points.points]
        if self.message:
            out["message"] = self.message
        return out


def branch_data(problem: MidpointProblem, p, budget: Budget | None = None,
                seed: int = 0) -> ChordFiberReport:
    """Critical points of ``L`` on the fiber curve and their ramification indices.

    A critical point of multiplicity ``k`` in the scheme cut by the fiber
    equations and the Jacobian determinant has ramification index ``k + 1``
    (on a smooth fiber the determinant restricts to ``dL/dt`` in a local
    parameter ``t``).
    """
    problem = _require_L(problem, budget)
    p = _rational_point(p)
    report = ChordFiberReport(p, problem.L)
    crit = critical_polynomial(problem, p)
    fib = fiber_ideal(problem, p)
    if not crit.terms:
        report.status = "on_K0_closure"
        report.message = "L is constant along a component of the fiber"
        return report
    if not _fiber_is_smooth(problem, p, budget):
        report.status = "on_K0_closure"
        report.message = "the fiber is singular"
        return report
    try:
        sols = solve(fib + crit, budget, seed=seed)
    except PositiveDimensionError:
        report.status = "on_K0_closure"
        report.message = "positive-dimensional branch locus"
        return report
    report.branch_points = sols
    report.rho = [pt.multiplicity + 1 for pt in sols.points]
    values = []
    for pt in sols.points:
        c = complex(problem.L(pt.coordinates))
        if not any(abs(c - v) <= 1e-9 * max(1.0, abs(v)) for v in values):
            values.append(c)
    report.branch_values = values
    return report


def _optional(problem, key, compute, budget, seconds):
    """``compute(budget)`` under a time allowance; ``None`` (remembered) when it runs out."""
    if problem._cache.get(("unavailable", key)):
        return None
    steps = budget.max_steps if budget is not None else DEFAULT_STEPS
    try:
        return compute(Budget(steps, seconds))
    except BudgetExceeded:
        problem._cache[("unavailable", key)] = True
        return None


def k0_ideal(problem, budget=None, seconds=K0_SECONDS):
    """The K0 closure ideal, or ``None`` when it cannot be eliminated in time."""
    return _optional(problem, "k0", lambda b: k0_closure(problem, b), budget, seconds)


def line_critical_ideal(problem, p, direction) -> IdealHandle:
    """Singular fibers over the line ``p + t*direction``, as an ideal in ``(x, t)``."""
    p = _rational_point(p)
    direction = _rational_point(direction)
    (t,) = fresh_names("t", 1, problem.x_vars)
    ring = problem.x_vars + (t,)
    tp = Polynomial.variable(ring, t)
    reflect = {v: 2 * (Polynomial.constant(ring, c) + tp * dv) - Polynomial.variable(ring, v)
               for v, c, dv in zip(problem.x_vars, p, direction)}
    gens = [e.in_ring(ring) for e in problem.X.equations]
    gens += [e.in_ring(ring).substitute(reflect, ring=ring) for e in problem.Y.equations]
    minors = [q for q in jacobian(gens, problem.x_vars).minors(len(gens)) if q.terms]
    return IdealHandle(gens + minors, ring)


def line_crossings(problem, p, direction, budget=None):
    """Parameters ``t`` where the line ``p + t*direction`` meets the K0 closure.

    Returns ``None`` when the whole line lies in it.
    """
    try:
        sols = solve(line_critical_ideal(problem, p, direction), budget)
    except PositiveDimensionError:
        return None
    return sorted({pt.coordinates[-1] for pt in sols.points}, key=abs)


def k0_margin(problem, p, budget=None):
    """How far ``p`` is from the K0 closure, as ``(method, value)``.

    With the K0 generators at hand the value is their normalised residual.
    Otherwise it is the distance to the crossings along the coordinate axes.
    A value of 0 means ``p`` lies on the closure exactly.
    """
    p = _rational_point(p)
    k0 = k0_ideal(problem, budget)
    if k0 is not None:
        if _exactly_on(k0, p):
            return "residual", 0.0
        return "residual", ideal_residual(k0, [float(v) for v in p])
    if not _fiber_is_smooth(problem, p, budget):
        return "axis_distance", 0.0
    best = math.inf
    for i in range(problem.m):
        axis = [1 if j == i else 0 for j in range(problem.m)]
        ts = line_crossings(problem, p, axis, budget)
        if ts is None:
            return "axis_distance", 0.0
        if ts:
            best = min(best, abs(ts[0]))
    return "axis_distance", best


def _k0_check(problem, p, budget):
    method, value = k0_margin(problem, p, budget)
    if value == 0.0:
        raise OnK0ClosureError(f"p={[str(v) for v in p]} lies on the K0 closure", 0.0)
    if value <= K0_RESIDUAL:
        raise OnK0ClosureError(f"p is within {method} {value:.2e} of the K0 closure", value)
    if not _fiber_is_smooth(problem, p, budget):
        raise OnK0ClosureError("the fiber is singular at p", 0.0)
    return value


def euler_characteristic(problem: MidpointProblem, p, budget: Budget | None = None,
                         seed: int = 0) -> ChordFiberReport:
    """Euler characteristic of the chord fiber over ``p``."""
    if problem.n >= 3:
        warnings.warn("numeric fiber analysis for n >= 3 can exceed desk-scale budgets",
                      RuntimeWarning, stacklevel=2)
    problem = _require_L(problem, budget)
    p = _rational_point(p)
    _k0_check(problem, p, budget)
    d = geometric_degree(problem, p, seed=seed, budget=budget)
    report = branch_data(problem, p, budget, seed=seed)
    if report.status != "generic":
        raise OnK0ClosureError(report.message)
    report.d = d
    report.chi = report.riemann_hurwitz()
    return report


def ramification_index_numeric(problem: MidpointProblem, p, point, eps: float = 1e-6,
                               radius: float = 1e-2, budget: Budget | None = None) -> int:
    """Sheets of ``L`` on the fiber curve that meet at ``point``.

    Counts solutions of the fiber equations on the level set ``L = c + eps``
    that lie within ``radius`` of the branch point, ``c = L(point)``.
    """
    problem = _require_L(problem, budget)
    c = complex(problem.L(point))
    shifted = Fraction(c.real + eps)
    fib = fiber_ideal(problem, p) + (problem.L_polynomial() - to_rational(shifted))
    if abs(c.imag) > 1e-12:
        raise ValueError("only real branch values are supported by this probe")
    sols = solve(fib, budget)
    near = 0
    for pt in sols.points:
        if max(abs(a - b) for a, b in zip(pt.coordinates, point)) <= radius:
            near += pt.multiplicity
    return near


# ---------------------------------------------------------------- sampling experiments

def _random_point(rng, m):
    return tuple(QQ(rng.randint(-255, 255), rng.randint(1, 255)) for _ in range(m))


def mu_invariant(problem: MidpointProblem, samples: int = 10, seed: int = 0,
                 budget: Budget | None = None, include_l_infinity: bool = True,
                 return_reports: bool = False):
    """Common Euler characteristic of generic chord fibers.

    Sample points are rejected when they come within ``1e-4`` of the K0
    closure or (if its ideal is available) of ``V(l_infinity)``.
    """
    problem = _require_L(problem, budget)
    rng = random.Random(seed)
    linf = None
    if include_l_infinity:
        linf = _optional(problem, ("l_inf", problem.L),
                         lambda b: l_infinity(problem, b), budget, K0_SECONDS)
    reports = []
    attempts = 0
    while len(reports) < samples:
        attempts += 1
        if attempts > 20 * samples:
            raise RuntimeError("could not draw enough generic points")
        p = _random_point(rng, problem.m)
        if linf is not None and ideal_residual(linf, [float(v) for v in p]) < GENERIC_REJECT_RESIDUAL:
            continue
        if k0_margin(problem, p, budget)[1] < GENERIC_REJECT_RESIDUAL:
            continue
        try:
            reports.append(euler_characteristic(problem, p, budget, seed=rng.randint(0, 2**31)))
        except OnK0ClosureError:
            continue
    values = Counter(r.chi for r in reports)
    if len(values) > 1:
        common = values.most_common(1)[0][0]
        dissent = [r for r in reports if r.chi != common]
        raise MuDisagreementError(
            f"chord fiber Euler characteristics disagree: {dict(values)}", dissent)
    mu = reports[0].chi
    return (mu, reports) if return_reports else mu


def draw_admissible_forms(problem, count, seed, budget=None):
    rng = random.Random(seed)
    forms = []
    while len(forms) < count:
        forms.append(choose_admissible_L(problem, seed=rng.randint(0, 2**31), budget=budget))
    return forms


def l_invariance_check(problem: MidpointProblem, p, trials: int = 2, seed: int = 0,
                       budget: Budget | None = None, return_reports: bool = False):
    """True iff the Euler characteristic at ``p`` is the same for independent admissible forms."""
    reports = []
    for L in draw_admissible_forms(problem, trials, seed, budget):
        reports.append(euler_characteristic(problem.with_L(L), p, budget, seed=seed))
    same = len({r.chi for r in reports}) == 1
    return (same, reports) if return_reports else same


@dataclass
class HTrial:
    H: tuple
    status: str
    mu: int | None = None
    L: LinearForm | None = None
    message: str = ""


def generic_h_experiment(X: VarietySpec, Y: VarietySpec, trials: int = 5, seed: int = 0,
                         samples: int = 10, budget: Budget | None = None,
                         matrices=None, include_l_infinity: bool = False,
                         k0_seconds: float = 5.0) -> list:
    """Euler characteristic of generic chord fibers of ``(X, H(Y))`` for random ``H``."""
    for spec in (X, Y):
        if not check_strong_ci(spec, budget).passed:
            raise ValueError("inputs must be strong complete intersections")
    rng = random.Random(seed)
    if matrices is None:
        matrices = [random_linear_map_H(rng.randint(0, 2**31), X.m) for _ in range(trials)]
    results = []
    for k, H in enumerate(matrices):
        Yh = apply_H(Y, H)
        problem = MidpointProblem(X, Yh, None, seed=seed + k)
        if not check_general_position(problem, budget):
            results.append(HTrial(H, "skipped", message="not in general position"))
            continue
        L = choose_admissible_L(problem, budget=budget)
        problem = problem.with_L(L)
        k0_ideal(problem, budget, k0_seconds)  # short try; axis distances are the fallback
        mu = mu_invariant(problem, samples, seed=seed + k, budget=budget,
                          include_l_infinity=include_l_infinity)
        results.append(HTrial(H, "ok", mu, L))
    computed = [r for r in results if r.status == "ok"]
    if not computed:
        raise RuntimeError("every H trial failed the general position check")
    if len({r.mu for r in computed}) > 1:
        raise MuDisagreementError(
            "mu differs across H: " + ", ".join(str(r.mu) for r in computed), computed)
    return results


# ---------------------------------------------------------------- properness probe

@dataclass
class ProbeSequence:
    p: tuple
    targets: list
    min_abs_L: list
    min_norm: list

    @property
    def monotone(self) -> bool:
        return all(b > a for a, b in zip(self.min_abs_L, self.min_abs_L[1:]))


def properness_probe(problem: MidpointProblem, sequences: int = 20, seed: int = 0,
                     exponents: Sequence[int] = range(1, 10),
                     budget: Budget | None = None) -> list:
    """Divergent point sequences on ``X x Y`` with bounded midpoints.

    Sequence ``s`` fixes a midpoint ``p`` in the unit box and a random linear
    form ``M``; its k-th term is the set of fiber points with ``M = 10^k``.  The
    smallest ``|L|`` over each term is recorded.
    """
    problem = _require_L(problem, budget)
    rng = random.Random(seed)
    out = []
    for _ in range(sequences):
        while True:
            p = tuple(QQ(rng.randint(-64, 64), 64) for _ in range(problem.m))
            try:
                _k0_check(problem, p, budget)
                break
            except OnK0ClosureError:
                continue
        M = Polynomial.linear(problem.x_vars, [rng.randint(-5, 5) or 1 for _ in range(problem.m)])
        fib = fiber_ideal(problem, p)
        targets, mins, norms = [], [], []
        for k in exponents:
            R = QQ(10) ** k
            sols = solve(fib + (M - R), budget)
            if not sols.points:
                continue
            abs_L = [abs(complex(problem.L(pt.coordinates))) for pt in sols.points]
            nrm = [math.sqrt(sum(abs(z) ** 2 for z in pt.coordinates)
                             + sum(abs(2 * complex(float(c)) - z) ** 2
                                   for c, z in zip(p, pt.coordinates)))
                   for pt in sols.points]
            targets.append(int(R))
            mins.append(min(abs_L))
            norms.append(min(nrm))
        out.append(ProbeSequence(p, targets, mins, norms))
    return out


# ---------------------------------------------------------------- transport

@dataclass
class TransportResult:
    start: np.ndarray
    end: np.ndarray
    max_residual: float
    max_L_drift: float
    max_phi_error: float


class _NumericSystem:
    def __init__(self, problem):
        self.problem = problem
        ring = problem.source_vars
        self.m = problem.m
        self.eqs = problem.f_source() + problem.g_source()
        self.jac = [[e.diff(v) for v in ring] for e in self.eqs]
        self.L = problem.L_polynomial(ring)
        self.dL = np.array([complex(float(c)) for c in problem.L.coefficients]
                           + [0j] * self.m)

    def residuals(self, z):
        return np.array([evaluate_complex(e, z) for e in self.eqs], dtype=complex)

    def matrix(self, z):
        m = self.m
        rows = [[evaluate_complex(d, z) for d in row] for row in self.jac]
        half = np.hstack([0.5 * np.eye(m), 0.5 * np.eye(m)])
        A = np.vstack([np.array(rows, dtype=complex).reshape(len(rows), 2 * m),
                       half, self.dL[None, :]])
        return A

    def field(self, z, v):
        A = self.matrix(z)
        if np.linalg.cond(A) > 1e12:
            raise TransportError("trajectory reached a critical point of (Phi, L)")
        rhs = np.concatenate([np.zeros(len(self.eqs), dtype=complex), v, [0j]])
        return np.linalg.solve(A, rhs)

    def project(self, z, p_target, L0, iters=8):
        m = self.m
        for _ in range(iters):
            F = np.concatenate([self.residuals(z),
                                0.5 * (z[:m] + z[m:]) - p_target,
                                [evaluate_complex(self.L, z) - L0]])
            if np.max(np.abs(F)) < 1e-15 * max(1.0, np.max(np.abs(z))):
                break
            A = self.matrix(z)
            z = z - np.linalg.solve(A, F)
        return z


def _segment_meets(problem, p0, p1, budget=None, tol=GENERIC_REJECT_RESIDUAL) -> bool:
    """Whether the segment ``p0 -> p1`` passes within ``tol`` of the K0 closure."""
    p0q, p1q = _rational_point(p0), _rational_point(p1)
    direction = [b - a for a, b in zip(p0q, p1q)]
    if not any(direction):
        return k0_margin(problem, p0q, budget)[1] <= K0_RESIDUAL
    ts = line_crossings(problem, p0q, direction, budget)
    if ts is None:
        return True
    scale = math.sqrt(sum(float(d) ** 2 for d in direction))
    for t in ts:
        below = max(0.0, -t.real, t.real - 1.0)
        if math.hypot(below, t.imag) * scale <= tol:
            return True
    return False


def transport_fiber_point(problem: MidpointProblem, p0, p1, start, steps: int = 100,
                          budget: Budget | None = None, project: bool = True) -> TransportResult:
    """Carry a fiber point over ``p0`` to the fiber over ``p1`` keeping ``L`` fixed.

    Integrates ``A(z) z' = (0, 0, p1 - p0, 0)`` with classical RK4, where the
    rows of ``A`` are ``df(x)``, ``dg(y)``, the differential of the midpoint
    map and ``dL``.  After each step the point is pulled back onto
    ``{f = 0, g = 0, Phi = p(t), L = L0}`` by Newton's method.
    """
    problem = _require_L(problem, budget)
    m = problem.m
    p0c = np.array([complex(float(v)) for v in _rational_point(p0)])
    p1c = np.array([complex(float(v)) for v in _rational_point(p1)])
    z = np.array([complex(v) for v in start], dtype=complex)
    if z.size == m:
        z = np.concatenate([z, 2 * p0c - z])
    if z.size != 2 * m:
        raise ValueError("start must have m or 2m coordinates")
    sys = _NumericSystem(problem)
    if np.max(np.abs(sys.residuals(z)), initial=0) > 1e-8 * max(1.0, np.max(np.abs(z))) ** 2:
        raise TransportError("start point is not on X x Y")
    if _segment_meets(problem, p0, p1, budget):
        raise TransportError("segment from p0 to p1 meets the K0 closure")
    v = p1c - p0c
    L0 = evaluate_complex(sys.L, z)
    start_z = z.copy()
    h = 1.0 / steps
    max_res = max_drift = max_phi = 0.0
    if np.any(v):
        for k in range(steps):
            k1 = sys.field(z, v)
            k2 = sys.field(z + 0.5 * h * k1, v)
            k3 = sys.field(z + 0.5 * h * k2, v)
            k4 = sys.field(z + h * k3, v)
            z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            pt = p0c + (k + 1) * h * v
            if project:
                z = sys.project(z, pt, L0)
            res = float(np.max(np.abs(sys.residuals(z))))
            if not np.isfinite(res) or res > 1e-3:
                raise TransportError(f"residual blow-up ({res:.2e}) at step {k + 1}")
            max_res = max(max_res, res)
            max_drift = max(max_drift, abs(evaluate_complex(sys.L, z) - L0))
            max_phi = max(max_phi, float(np.max(np.abs(0.5 * (z[:m] + z[m:]) - pt))))
    return TransportResult(start_z, z, max_res, max_drift, max_phi)


def start_point(problem: MidpointProblem, p, seed: int = 0, budget: Budget | None = None):
    """A fiber point over ``p`` (first solution on a random level set of ``L``)."""
    problem = _require_L(problem, budget)
    rng = random.Random(seed)
    c = QQ(rng.randint(-50, 50), rng.randint(1, 9))
    sols = solve(fiber_ideal(problem, p) + (problem.L_polynomial() - c), budget)
    if not sols.points:
        raise TransportError("empty fiber")
    x = np.array(sols.points[0].coordinates, dtype=complex)
    pc = np.array([complex(float(v)) for v in _rational_point(p)])
    return np.concatenate([x, 2 * pc - x])


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class GridAxis:
    index: int
    lo: Fraction
    hi: Fraction
    cells: int

    def values(self):
        if self.cells == 1:
            return [self.lo]
        step = (self.hi - self.lo) / (self.cells - 1)
        return [self.lo + k * step for k in range(self.cells)]

    @property
    def spacing(self) -> float:
        return float(self.hi - self.lo) / max(self.cells - 1, 1)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple
    base: tuple

    @classmethod
    def parse(cls, text: str, names: Sequence[str], base=None):
        """Parse ``axis=lo:hi:cells[,axis=lo:hi:cells]``; axis is a name or 1-based index."""
        names = list(names)
        axes = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                axis, rng_text = part.split("=")
                lo, hi, cells = rng_text.split(":")
            except ValueError:
                raise ValueError(f"malformed grid axis {part!r}; expected axis=lo:hi:cells") from None
            axis = axis.strip()
            if axis in names:
                idx = names.index(axis)
            elif axis.isdigit() and 1 <= int(axis) <= len(names):
                idx = int(axis) - 1
            else:
                raise ValueError(f"unknown grid axis {axis!r}")
            ncells = int(cells)
            if ncells < 1:
                raise ValueError("grid needs at least one cell per axis")
            axes.append(GridAxis(idx, Fraction(lo.strip()), Fraction(hi.strip()), ncells))
        if not 1 <= len(axes) <= 2:
            raise ValueError("grids are one- or two-dimensional")
        base = tuple(Fraction(0) for _ in names) if base is None else tuple(Fraction(b) for b in base)
        return cls(tuple(axes), base)

    def points(self):
        """Grid points in row-major order, with their axis values."""
        if len(self.axes) == 1:
            combos = [(v,) for v in self.axes[0].values()]
        else:
            combos = [(a, b) for a in self.axes[0].values() for b in self.axes[1].values()]
        out = []
        for vals in combos:
            p = list(self.base)
            for ax, v in zip(self.axes, vals):
                p[ax.index] = v
            out.append((vals, tuple(p)))
        return out

    def neighbors(self, k):
        if len(self.axes) == 1:
            n = self.axes[0].cells
            return [j for j in (k - 1, k + 1) if 0 <= j < n]
        n1 = self.axes[1].cells
        i, j = divmod(k, n1)
        out = []
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            a, b = i + di, j + dj
            if 0 <= a < self.axes[0].cells and 0 <= b < n1:
                out.append(a * n1 + b)
        return out


@dataclass
class ScanCell:
    values: tuple
    p: tuple
    chi: int | None
    status: str
    message: str = ""


@dataclass
class ScanResult:
    grid: GridSpec
    cells: list
    jumps: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis1", "axis2", "chi", "status"])
        for c in self.cells:
            a1 = str(float(c.values[0]))
            a2 = str(float(c.values[1])) if len(c.values) > 1 else ""
            w.writerow([a1, a2, "" if c.chi is None else c.chi, c.status])
        return buf.getvalue()

    def generic_values(self):
        return sorted({c.chi for c in self.cells if c.status == "generic"})

    def marked(self):
        return [c for c in self.cells if c.status == "on_K0_closure"]


def _distance_to(ideal, p, grid):
    """First-order distance from ``p`` to V(ideal) within the slice."""
    gens = ideal.nonzero()
    if not gens or any(g.is_constant() for g in gens):
        return math.inf
    pc = [float(v) for v in p]
    best = 0.0
    for g in gens:
        val = abs(g.evaluate_complex(pc))
        grad = math.sqrt(sum(abs(g.diff(ax.index).evaluate_complex(pc)) ** 2 for ax in grid.axes))
        if val == 0:
            d = 0.0
        elif grad == 0:
            d = math.inf
        else:
            d = val / grad
        best = max(best, d)
    return best


def _distance_in_slice(problem, p, grid, budget):
    k0 = k0_ideal(problem, budget)
    if k0 is not None:
        return 0.0 if _exactly_on(k0, p) else _distance_to(k0, p, grid)
    best = math.inf
    for ax in grid.axes:
        axis = [1 if j == ax.index else 0 for j in range(problem.m)]
        ts = line_crossings(problem, p, axis, budget)
        if ts is None:
            return 0.0
        if ts:
            best = min(best, abs(ts[0]))
    return best


def _scan_cell(args):
    problem, grid, values, p, seed, max_seconds = args
    half = 0.5 * math.sqrt(sum(ax.spacing ** 2 for ax in grid.axes))
    pq = _rational_point(p)
    budget = Budget(max_seconds=max_seconds) if max_seconds else None
    try:
        if _distance_in_slice(problem, pq, grid, budget) <= half:
            return ScanCell(values, pq, None, "on_K0_closure")
    except BudgetExceeded as exc:
        return ScanCell(values, pq, None, "failed", f"BudgetExceeded: {exc}")
    try:
        rep = euler_characteristic(problem, pq, budget, seed=seed)
        return ScanCell(values, pq, rep.chi, "generic")
    except OnK0ClosureError as exc:
        return ScanCell(values, pq, None, "on_K0_closure", str(exc))
    except Exception as exc:  # per-cell failures never abort a scan
        return ScanCell(values, pq, None, "failed", f"{type(exc).__name__}: {exc}")


def scan(problem: MidpointProblem, grid: GridSpec, seed: int = 0, workers: int = 1,
         cell_seconds: float | None = 60.0, budget: Budget | None = None) -> ScanResult:
    """Euler characteristic over a real 1D or 2D window of target space."""
    problem = _require_L(problem, budget)
    k0_ideal(problem, budget)  # computed once, shipped to workers in the cache
    jobs = [(problem, grid, vals, p, seed, cell_seconds) for vals, p in grid.points()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        cells = [_scan_cell(j) for j in jobs]
    jumps = []
    for k, c in enumerate(cells):
        if c.status != "generic":
            continue
        for j in grid.neighbors(k):
            other = cells[j]
            if other.status == "generic" and other.chi != c.chi:
                jumps.append(k)
                break
    return ScanResult(grid, cells, jumps)
