"""Zero-dimensional polynomial systems over C, with multiplicities.

The quotient algebra ``Q[x]/I`` is built exactly from a grevlex Groebner
basis.  Multiplicities and the number of distinct points come from exact
linear algebra (characteristic polynomial of a generic multiplication map and
the rank of the trace form).  Coordinates come from a rational univariate
representation whose squarefree eliminant factors are solved numerically by
the Aberth-Ehrlich iteration and polished with Newton steps in extended
precision.
"""

from __future__ import annotations

import csv
import io
import random
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np

from .ideals import (Budget, IdealHandle, MonomialOrder, _GPoly, _reduce, groebner,
                     substitute_linear)
from .polycore import QQ, Polynomial

__all__ = [
    "SolutionSet",
    "SolutionPoint",
    "PositiveDimensionError",
    "IllConditionedClusterWarning",
    "solve",
    "count_with_multiplicity",
    "count_distinct",
    "aberth_roots",
    "residual",
]

DEFAULT_CLUSTER_RADIUS = 1e-7
DEFAULT_RESIDUAL_TOL = 1e-8
_MP_DPS = 40


class PositiveDimensionError(ValueError):
    pass


class SeparationError(RuntimeError):
    pass


class IllConditionedClusterWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolutionPoint:
    coordinates: tuple
    multiplicity: int


@dataclass(frozen=True)
class SolutionSet:
    variables: tuple
    points: tuple
    total_multiplicity: int
    clustering_radius: float = DEFAULT_CLUSTER_RADIUS

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def coordinates(self):
        return [p.coordinates for p in self.points]

    def multiplicities(self):
        return [p.multiplicity for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = []
        for v in self.variables:
            header += [f"re_{v}", f"im_{v}"]
        writer.writerow(header + ["multiplicity"])
        for p in self.points:
            row = []
            for c in p.coordinates:
                row += [repr(float(c.real)), repr(float(c.imag))]
            writer.writerow(row + [p.multiplicity])
        return buf.getvalue()


# ---------------------------------------------------------------- univariate helpers
# dense coefficient lists, lowest degree first

def _trim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _deriv(p):
    return _trim([p[i] * i for i in range(1, len(p))])


def _divmod(a, b):
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [QQ(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lb = b[-1]
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        c = r[-1] / lb
        q[shift] = c
        for i, bc in enumerate(b):
            r[shift + i] -= c * bc
        r = _trim(r)
    return _trim(q), r


def _monic(p):
    p = _trim(p)
    lc = p[-1]
    return [c / lc for c in p]


def _gcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _divmod(a, b)
        a, b = b, r
    return _monic(a) if a else a


def squarefree_decomposition(p):
    """Yun's algorithm: ``p = lc * prod(q_k^k)``; returns ``{k: q_k}``."""
    p = _monic(p)
    out = {}
    if len(p) <= 1:
        return out
    dp = _deriv(p)
    a = _gcd(p, dp)
    b, _ = _divmod(p, a)
    c, _ = _divmod(dp, a)
    d = [x - y for x, y in _pad(c, _deriv(b))]
    d = _trim(d)
    k = 1
    while len(b) > 1:
        a = _gcd(b, d)
        if len(a) > 1:
            out[k] = a
        b, _ = _divmod(b, a)
        c, _ = _divmod(d, a)
        d = _trim([x - y for x, y in _pad(c, _deriv(b))])
        k += 1
    return out


def _pad(a, b):
    n = max(len(a), len(b))
    a = list(a) + [QQ(0)] * (n - len(a))
    b = list(b) + [QQ(0)] * (n - len(b))
    return zip(a, b)


def aberth_roots(coeffs, tol=1e-14, max_iter=500):
    """All complex roots of a polynomial (coefficients lowest degree first).

    Aberth-Ehrlich simultaneous iteration in double precision.
    """
    c = np.array([complex(float(x)) for x in coeffs], dtype=complex)
    c = np.trim_zeros(c, "b")
    n = len(c) - 1
    if n < 1:
        return np.array([], dtype=complex)
    c = c / c[-1]
    high = c[::-1]
    dhigh = np.polyder(high)
    # Fujiwara-type radius for the initial circle
    radius = 2 * max(abs(c[n - k]) ** (1.0 / k) for k in range(1, n + 1)) or 1.0
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)
    for _ in range(max_iter):
        pz = np.polyval(high, z)
        dpz = np.polyval(dhigh, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1 - ratio * s)
        w = np.where(np.isfinite(w), w, 0)
        z = z - w
        if np.all(np.abs(w) <= tol * np.maximum(1.0, np.abs(z))):
            break
    return z


def _polish_root(coeffs, z):
    """Newton polish of a simple root in extended precision."""
    with mpmath.workdps(_MP_DPS):
        cs = [mpmath.mpf(int(x.numerator)) / int(x.denominator) for x in coeffs]
        high = cs[::-1]
        x = mpmath.mpc(z)
        for _ in range(60):
            p = mpmath.polyval(high, x)
            dp = _mp_deriv(high, x)
            if dp == 0:
                break
            step = p / dp
            x -= step
            if abs(step) <= mpmath.mpf(10) ** (-_MP_DPS + 5) * max(1, abs(x)):
                break
        return x


def _mp_deriv(high, x):
    n = len(high) - 1
    acc = mpmath.mpc(0)
    for i, c in enumerate(high[:-1]):
        acc = acc * x + c * (n - i)
    return acc


# ---------------------------------------------------------------- quotient algebra

class QuotientAlgebra:
    """Exact model of ``Q[x]/I`` for a zero-dimensional ideal."""

    def __init__(self, ideal: IdealHandle, budget: Budget | None = None):
        self.ideal = ideal
        nv = len(ideal.variables)
        all_idx = list(range(nv))
        gens, variables, subs = substitute_linear(ideal.generators, all_idx, ideal.variables)
        self.reduced_vars = variables
        self.substitutions = subs
        self.unit = False
        if not variables:
            # every variable was solved linearly: at most one point
            self.unit = any(g.terms for g in gens)
            self.basis = [] if self.unit else [()]
            self.gb = None
            self.mult = []
            return
        red = IdealHandle(gens or [Polynomial(variables)], variables)
        order = MonomialOrder.grevlex(len(variables))
        gb = groebner(red, order, budget)
        self.gb = gb
        if gb.is_unit():
            self.unit = True
            self.basis = []
            self.mult = []
            return
        lms = gb.leading_monomials
        n = len(variables)
        for i in range(n):
            if not any(m[i] > 0 and sum(m) == m[i] for m in lms):
                raise PositiveDimensionError(
                    f"ideal is not zero-dimensional (no pure power of {variables[i]})")
        self.basis = self._standard_monomials(lms, n, order)
        self.index = {b: k for k, b in enumerate(self.basis)}
        gpolys = [_GPoly(dict(g.terms), order) for g in gb.elements]
        self.mult = [self._mult_matrix(i, gpolys, order, budget) for i in range(n)]

    @staticmethod
    def _standard_monomials(lms, n, order):
        start = (0,) * n
        seen = {start}
        stack = [start]
        out = []
        while stack:
            m = stack.pop()
            if any(all(a <= b for a, b in zip(lm, m)) for lm in lms):
                continue
            out.append(m)
            for i in range(n):
                mm = m[:i] + (m[i] + 1,) + m[i + 1:]
                if mm not in seen:
                    seen.add(mm)
                    stack.append(mm)
        out.sort(key=order.key)
        return out

    def _mult_matrix(self, var, gpolys, order, budget):
        N = len(self.basis)
        M = np.zeros((N, N), dtype=object)
        M[:, :] = QQ(0)
        for col, b in enumerate(self.basis):
            m = b[:var] + (b[var] + 1,) + b[var + 1:]
            if m in self.index:
                M[self.index[m], col] = QQ(1)
                continue
            nf = _reduce({m: QQ(1)}, gpolys, order, budget or Budget.unlimited(), {})
            for mono, c in nf.items():
                M[self.index[mono], col] = c
        return M

    @property
    def dim(self) -> int:
        return len(self.basis)

    def _element_matrices(self):
        # matrix of multiplication by each standard monomial
        mats = {}
        N = self.dim
        eye = np.zeros((N, N), dtype=object)
        eye[:, :] = QQ(0)
        for k in range(N):
            eye[k, k] = QQ(1)
        for b in self.basis:
            if not any(b):
                mats[b] = eye
                continue
            j = next(i for i, e in enumerate(b) if e)
            prev = b[:j] + (b[j] - 1,) + b[j + 1:]
            mats[b] = self.mult[j].dot(mats[prev])
        return mats

    def trace_data(self):
        if not hasattr(self, "_tau"):
            mats = self._element_matrices()
            self._mats = mats
            self._tau = np.array([np.trace(mats[b]) for b in self.basis], dtype=object)
        return self._mats, self._tau

    def count_distinct(self) -> int:
        if self.unit:
            return 0
        if not self.mult:
            return 1
        mats, tau = self.trace_data()
        N = self.dim
        T = [[QQ(0)] * N for _ in range(N)]
        for i, b in enumerate(self.basis):
            prod = tau.dot(mats[b])  # row: Tr(M_{b * b_j}) over j
            for j in range(N):
                T[i][j] = prod[j]
        return _rank(T)

    def linear_form_matrix(self, weights):
        M = np.zeros((self.dim, self.dim), dtype=object)
        M[:, :] = QQ(0)
        for w, Mi in zip(weights, self.mult):
            if w:
                M = M + Mi * QQ(w)
        return M


def _rank(rows):
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pv = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col] / pv
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def count_with_multiplicity(ideal: IdealHandle, budget: Budget | None = None) -> int:
    """Number of solutions counted with multiplicity (dimension of the quotient)."""
    return QuotientAlgebra(ideal, budget).dim


def count_distinct(ideal: IdealHandle, budget: Budget | None = None) -> int:
    """Number of distinct solutions (rank of the trace form)."""
    return QuotientAlgebra(ideal, budget).count_distinct()


# ---------------------------------------------------------------- solving

def _newton_sums_charpoly(power_traces, N):
    # power_traces[k] = Tr(M^k), k = 0..N; returns charpoly lowest degree first
    e = [QQ(1)]
    for k in range(1, N + 1):
        s = QQ(0)
        for i in range(1, k + 1):
            term = e[k - i] * power_traces[i]
            s += term if i % 2 == 1 else -term
        e.append(s / k)
    # charpoly = sum (-1)^k e_k T^(N-k)
    coeffs = [QQ(0)] * (N + 1)
    for k in range(N + 1):
        coeffs[N - k] = e[k] if k % 2 == 0 else -e[k]
    return coeffs


def _mp_eval_poly(poly: Polynomial, values):
    acc = mpmath.mpc(0)
    for m, c in poly.terms.items():
        t = mpmath.mpf(int(c.numerator)) / int(c.denominator)
        for v, e in zip(values, m):
            if e:
                t = t * v ** e
        acc += t
    return acc


def residual(poly: Polynomial, point) -> float:
    """Evaluation residual scaled by coefficient size and point magnitude."""
    if not poly.terms:
        return 0.0
    value = abs(poly.evaluate_complex(point))
    scale = max(1.0, max((abs(complex(z)) for z in point), default=1.0))
    norm = poly.coefficient_norm() * scale ** poly.degree()
    return value / norm


def solve(ideal: IdealHandle, budget: Budget | None = None, seed: int = 0,
          clustering_radius: float = DEFAULT_CLUSTER_RADIUS,
          residual_tol: float = DEFAULT_RESIDUAL_TOL, max_retries: int = 3) -> SolutionSet:
    """All solutions of a zero-dimensional system, with multiplicities."""
    qa = QuotientAlgebra(ideal, budget)
    variables = ideal.variables
    if qa.unit:
        return SolutionSet(variables, (), 0, clustering_radius)
    reduced_points = []  # (mp coords over qa.reduced_vars, multiplicity)
    if not qa.mult:
        reduced_points = [((), 1)]
    else:
        reduced_points = _rur_points(qa, seed, max_retries)
    points = []
    with mpmath.workdps(_MP_DPS):
        for coords, mult in reduced_points:
            values = dict(zip(qa.reduced_vars, coords))
            for name, image in reversed(qa.substitutions):
                values[name] = _mp_eval_poly(image, [values[v] for v in image.variables])
            full = tuple(complex(values[v]) for v in variables)
            points.append((full, mult))
    points = _merge_clusters(points, clustering_radius)
    for full, _ in points:
        worst = max((residual(g, full) for g in ideal.generators), default=0.0)
        if worst > residual_tol:
            warnings.warn(f"solution residual {worst:.3e} exceeds tolerance {residual_tol:.1e}",
                          IllConditionedClusterWarning, stacklevel=2)
    points.sort(key=lambda pm: tuple((round(z.real, 9), round(z.imag, 9)) for z in pm[0]))
    sol = tuple(SolutionPoint(c, m) for c, m in points)
    return SolutionSet(variables, sol, sum(m for _, m in points), clustering_radius)


def _merge_clusters(points, radius):
    merged = []
    for coords, mult in points:
        for k, (c2, m2) in enumerate(merged):
            if max(abs(a - b) for a, b in zip(coords, c2)) <= 2 * radius:
                warnings.warn("distinct solutions closer than the clustering radius were merged",
                              IllConditionedClusterWarning, stacklevel=3)
                merged[k] = (c2, m2 + mult)
                break
        else:
            merged.append((coords, mult))
    coords = [c for c, _ in merged]
    for i in range(len(coords)):
        for j in range(i + 1, len(coords)):
            gap = max(abs(a - b) for a, b in zip(coords[i], coords[j]))
            if gap <= 10 * radius:
                warnings.warn(f"ill-conditioned cluster: points {gap:.2e} apart",
                              IllConditionedClusterWarning, stacklevel=3)
    return merged


def _rur_points(qa: QuotientAlgebra, seed, max_retries):
    N = qa.dim
    n = len(qa.reduced_vars)
    distinct = qa.count_distinct()
    mats, tau = qa.trace_data()
    rng = random.Random(seed)
    e1 = np.zeros(N, dtype=object)
    e1[:] = QQ(0)
    e1[qa.index[(0,) * n]] = QQ(1)
    for attempt in range(max_retries + 1):
        if attempt == 0 and n == 1:
            weights = [1]
        else:
            weights = [rng.randint(-9, 9) or 1 for _ in range(n)]
        Mu = qa.linear_form_matrix(weights)
        w = [e1]
        for _ in range(N):
            w.append(Mu.dot(w[-1]))
        traces = [tau.dot(v) for v in w]
        chi = _newton_sums_charpoly(traces, N)
        parts = squarefree_decomposition(chi)
        sqf_deg = sum(len(q) - 1 for q in parts.values())
        if sqf_deg == distinct:
            break
    else:
        raise SeparationError("no separating linear form found; system too degenerate")
    # RUR: sigma_{v,l} = Tr(M_v Mu^l)
    f = [QQ(1)]
    for q in parts.values():
        f = _polymul(f, q)
    D = len(f) - 1

    def g_poly(sig):
        # g(T) = sum_k T^k sum_{s=k+1}^{D} f_s sig_{s-k-1}
        return [sum((f[s] * sig[s - k - 1] for s in range(k + 1, D + 1)), QQ(0))
                for k in range(D)]

    sig1 = traces[:D]
    g1 = g_poly(sig1)
    gv = []
    for j in range(n):
        sig = [tau.dot(qa.mult[j].dot(w[l])) for l in range(D)]
        gv.append(g_poly(sig))
    out = []
    with mpmath.workdps(_MP_DPS):
        g1h = [_mpq_to_mp(c) for c in g1][::-1]
        gvh = [[_mpq_to_mp(c) for c in g][::-1] for g in gv]
        for k in sorted(parts):
            q = parts[k]
            for z in aberth_roots(q):
                r = _polish_root(q, z)
                den = mpmath.polyval(g1h, r)
                coords = tuple(mpmath.polyval(gh, r) / den for gh in gvh)
                out.append((coords, k))
    return out


def _mpq_to_mp(c):
    return mpmath.mpf(int(c.numerator)) / int(c.denominator)


def _polymul(a, b):
    out = [QQ(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out
