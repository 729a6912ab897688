"""Groebner bases over the rationals and the ideal operations built on them.

The engine is Buchberger's algorithm with the sugar selection strategy and the
Gebauer-Moeller installation of both Buchberger criteria.  Every expensive
entry point takes a :class:`Budget`; exceeding it raises
:class:`BudgetExceeded` with progress statistics.
"""

from __future__ import annotations

import heapq
import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .polycore import QQ, Polynomial, RingMismatchError, parse_polynomial, to_rational

__all__ = [
    "Budget",
    "BudgetExceeded",
    "MonomialOrder",
    "IdealHandle",
    "GroebnerBasis",
    "groebner",
    "normal_form",
    "eliminate",
    "saturate",
    "intersect",
    "dimension",
    "degree_of_variety",
    "render_ideal",
    "parse_ideal",
    "fresh_names",
    "SliceDisagreementError",
    "buchberger_criterion",
    "computed_bases",
    "s_polynomial",
    "substitute_linear",
    "saturate_variable",
    "ideal_contains",
    "random_affine_forms",
]

DEFAULT_STEPS = 200_000


class BudgetExceeded(RuntimeError):
    """Raised when a computation runs past its step or time budget."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = dict(stats or {})


class SliceDisagreementError(RuntimeError):
    pass


class Budget:
    """Shared step/time allowance.  One step is one elementary reduction."""

    def __init__(self, max_steps: int | None = DEFAULT_STEPS, max_seconds: float | None = None):
        self.max_steps = max_steps
        self.max_seconds = max_seconds
        self.steps = 0
        self._start = time.monotonic()

    def tick(self, n=1, stats=None):
        self.steps += n
        if self.max_steps is not None and self.steps > self.max_steps:
            raise BudgetExceeded(
                f"step budget of {self.max_steps} exceeded",
                {"steps": self.steps, **(stats or {})})
        if self.max_seconds is not None and self.steps % 256 == 0:
            if time.monotonic() - self._start > self.max_seconds:
                raise BudgetExceeded(
                    f"time budget of {self.max_seconds}s exceeded",
                    {"steps": self.steps, **(stats or {})})

    @classmethod
    def unlimited(cls):
        return cls(None, None)


def _budget(budget):
    return Budget() if budget is None else budget


# ---------------------------------------------------------------- orders

_SHIFT = 40
_OFFSET = 1 << (_SHIFT - 1)


class MonomialOrder:
    """Graded reverse lex, lex, or a two-block elimination order.

    ``block`` lists the variable indices of the first (eliminated) block; each
    block is ordered by grevlex internally.
    """

    __slots__ = ("kind", "nvars", "block", "_rows", "_cache")

    def __init__(self, kind: str, nvars: int, block: Iterable[int] = ()):
        if kind not in ("grevlex", "lex", "block"):
            raise ValueError(f"unknown monomial order {kind!r}")
        self.kind = kind
        self.nvars = nvars
        self.block = tuple(sorted(block)) if kind == "block" else ()
        if kind == "block" and not (0 < len(self.block) < nvars):
            raise ValueError("block order needs a proper nonempty block")
        self._rows = self._weight_rows()
        self._cache = {}

    @classmethod
    def grevlex(cls, nvars):
        return cls("grevlex", nvars)

    @classmethod
    def lex(cls, nvars):
        return cls("lex", nvars)

    @classmethod
    def elimination(cls, variables, drop):
        variables = tuple(variables)
        return cls("block", len(variables), [variables.index(v) for v in drop])

    def _weight_rows(self):
        n = self.nvars
        if self.kind == "lex":
            return [[(i, 1)] for i in range(n)]

        def grevlex_rows(idx):
            rows = [[(i, 1) for i in idx]]
            rows += [[(i, -1)] for i in reversed(idx[1:])]
            return rows

        if self.kind == "grevlex":
            return grevlex_rows(list(range(n)))
        first = list(self.block)
        rest = [i for i in range(n) if i not in self.block]
        return grevlex_rows(first) + grevlex_rows(rest)

    def key(self, mono) -> int:
        k = self._cache.get(mono)
        if k is None:
            k = 0
            for row in self._rows:
                v = 0
                for i, w in row:
                    v += w * mono[i]
                k = (k << _SHIFT) | (v + _OFFSET)
            self._cache[mono] = k
        return k

    def signature(self):
        return (self.kind, self.nvars, self.block)

    def __eq__(self, other):
        return isinstance(other, MonomialOrder) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        if self.kind == "block":
            return f"MonomialOrder(block{list(self.block)}, nvars={self.nvars})"
        return f"MonomialOrder({self.kind}, nvars={self.nvars})"


# ---------------------------------------------------------------- ideal values

@dataclass(frozen=True)
class IdealHandle:
    generators: tuple
    variables: tuple

    def __init__(self, generators: Iterable[Polynomial], variables: Sequence[str] | None = None):
        gens = list(generators)
        if variables is None:
            if not gens:
                raise ValueError("cannot infer the ring of an empty generator list")
            variables = gens[0].variables
        variables = tuple(variables)
        gens = [g.in_ring(variables) if g.variables != variables else g for g in gens]
        if not gens:
            gens = [Polynomial(variables)]
        object.__setattr__(self, "generators", tuple(gens))
        object.__setattr__(self, "variables", variables)

    @classmethod
    def parse(cls, texts, variables):
        return cls([parse_polynomial(t, variables) for t in texts], variables)

    def nonzero(self):
        return [g for g in self.generators if g.terms]

    def __add__(self, other):
        if isinstance(other, IdealHandle):
            other = other.generators
        elif isinstance(other, Polynomial):
            other = [other]
        extra = [g.in_ring(self.variables) for g in other]
        return IdealHandle(list(self.generators) + extra, self.variables)

    def in_ring(self, variables):
        return IdealHandle([g.in_ring(variables) for g in self.generators], variables)

    def is_zero_ideal(self):
        return not self.nonzero()

    def render(self) -> str:
        return render_ideal(self)

    def __str__(self):
        return "(" + ", ".join(str(g) for g in self.generators) + ")"


@dataclass(frozen=True)
class GroebnerBasis:
    elements: tuple
    order: MonomialOrder
    variables: tuple

    @property
    def leading_monomials(self):
        return [max(g.terms, key=self.order.key) for g in self.elements]

    def is_unit(self) -> bool:
        return len(self.elements) == 1 and self.elements[0].is_constant() and bool(self.elements[0])

    def is_zero(self) -> bool:
        return not self.elements

    def normal_form(self, p: Polynomial) -> Polynomial:
        return normal_form(p, self)

    def contains(self, p: Polynomial) -> bool:
        return not normal_form(p, self).terms

    def ideal(self) -> IdealHandle:
        return IdealHandle(self.elements or [Polynomial(self.variables)], self.variables)

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)


# ---------------------------------------------------------------- internals

def _divides(a, b):
    for x, y in zip(a, b):
        if x > y:
            return False
    return True


def _lcm(a, b):
    return tuple(x if x > y else y for x, y in zip(a, b))


def _coprime(a, b):
    for x, y in zip(a, b):
        if x and y:
            return False
    return True


class _GPoly:
    __slots__ = ("terms", "lm", "sugar", "tail")

    def __init__(self, terms, order, sugar=None):
        lm = max(terms, key=order.key)
        inv = 1 / terms[lm]
        if inv != 1:
            terms = {m: c * inv for m, c in terms.items()}
        self.terms = terms
        self.lm = lm
        self.sugar = max(sum(m) for m in terms) if sugar is None else sugar
        self.tail = [(m, c) for m, c in terms.items() if m != lm]


def _reduce(terms, basis, order, budget, stats, full=True):
    """Normal form of ``terms`` (dict) by the monic polynomials ``basis``."""
    key = order.key
    p = dict(terms)
    heap = [(-key(m), m) for m in p]
    heapq.heapify(heap)
    rem = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = p.pop(m, None)
        if c is None:
            continue
        for g in basis:
            if _divides(g.lm, m):
                break
        else:
            rem[m] = c
            if not full:
                rem.update(p)
                return rem
            continue
        budget.tick(1, stats)
        q = tuple(a - b for a, b in zip(m, g.lm))
        for gm, gc in g.tail:
            mm = tuple(a + b for a, b in zip(gm, q))
            old = p.get(mm)
            if old is None:
                p[mm] = -c * gc
                heapq.heappush(heap, (-key(mm), mm))
            else:
                new = old - c * gc
                if new:
                    p[mm] = new
                else:
                    del p[mm]
    return rem


def _spoly(f, g):
    lcm = _lcm(f.lm, g.lm)
    qf = tuple(a - b for a, b in zip(lcm, f.lm))
    qg = tuple(a - b for a, b in zip(lcm, g.lm))
    out = {}
    for m, c in f.tail:
        mm = tuple(a + b for a, b in zip(m, qf))
        out[mm] = out.get(mm, 0) + c
    for m, c in g.tail:
        mm = tuple(a + b for a, b in zip(m, qg))
        v = out.get(mm, 0) - c
        out[mm] = v
    out = {m: c for m, c in out.items() if c}
    deg_l = sum(lcm)
    sugar = max(f.sugar + deg_l - sum(f.lm), g.sugar + deg_l - sum(g.lm))
    return out, sugar


class _Pair:
    __slots__ = ("i", "j", "lcm", "sugar")

    def __init__(self, i, j, polys):
        self.i, self.j = i, j
        f, g = polys[i], polys[j]
        self.lcm = _lcm(f.lm, g.lm)
        d = sum(self.lcm)
        self.sugar = max(f.sugar + d - sum(f.lm), g.sugar + d - sum(g.lm))


def _update(G, B, h, polys):
    """Gebauer-Moeller update of basis indices ``G`` and pairs ``B`` with ``h``."""
    hl = polys[h].lm
    C = [_Pair(g, h, polys) for g in G]
    D = []
    while C:
        p = C.pop(0)
        g_lm = polys[p.i].lm
        if _coprime(hl, g_lm):
            D.append(p)
            continue
        redundant = False
        for q in itertools.chain(C, D):
            if _divides(q.lcm, p.lcm):
                redundant = True
                break
        if not redundant:
            D.append(p)
    E = [p for p in D if not _coprime(hl, polys[p.i].lm)]
    newB = []
    for p in B:
        if (_divides(hl, p.lcm)
                and _lcm(polys[p.i].lm, hl) != p.lcm
                and _lcm(polys[p.j].lm, hl) != p.lcm):
            continue
        newB.append(p)
    newB.extend(E)
    newG = [g for g in G if not _divides(hl, polys[g].lm)]
    newG.append(h)
    return newG, newB


_GB_CACHE: dict = {}
_GB_CACHE_MAX = 512


def groebner(ideal: IdealHandle, order: MonomialOrder | None = None,
             budget: Budget | None = None) -> GroebnerBasis:
    """Reduced Groebner basis of ``ideal`` with respect to ``order``.

    Deterministic for fixed inputs.  The zero ideal has the empty basis and
    the unit ideal the basis ``[1]``.
    """
    variables = ideal.variables
    n = len(variables)
    if order is None:
        order = MonomialOrder.grevlex(n)
    if order.nvars != n:
        raise RingMismatchError("order and ring disagree on the number of variables")
    cache_key = (tuple(frozenset(g.terms.items()) for g in ideal.generators), variables, order)
    hit = _GB_CACHE.get(cache_key)
    if hit is not None:
        return hit
    budget = _budget(budget)
    stats = {"basis": 0, "pairs": 0, "processed": 0}
    key = order.key

    polys: list[_GPoly] = []
    gens = [dict(g.terms) for g in ideal.generators if g.terms]
    gens.sort(key=lambda t: key(max(t, key=key)))
    G: list[int] = []
    B: list[_Pair] = []
    for t in gens:
        basis = [polys[i] for i in G]
        r = _reduce(t, basis, order, budget, stats)
        if not r:
            continue
        h = _GPoly(r, order)
        if not any(h.lm):
            return _finish([Polynomial.constant(variables, 1)], order, variables, cache_key)
        polys.append(h)
        G, B = _update(G, B, len(polys) - 1, polys)

    while B:
        stats["basis"] = len(G)
        stats["pairs"] = len(B)
        best = min(range(len(B)), key=lambda k: (B[k].sugar, key(B[k].lcm), B[k].i, B[k].j))
        pair = B.pop(best)
        stats["processed"] += 1
        f, g = polys[pair.i], polys[pair.j]
        s, sugar = _spoly(f, g)
        if not s:
            continue
        basis = [polys[i] for i in G]
        r = _reduce(s, basis, order, budget, stats)
        if not r:
            continue
        h = _GPoly(r, order, sugar)
        if not any(h.lm):
            return _finish([Polynomial.constant(variables, 1)], order, variables, cache_key)
        polys.append(h)
        G, B = _update(G, B, len(polys) - 1, polys)

    # interreduce to the reduced basis
    final = [polys[i] for i in G]
    final.sort(key=lambda p: key(p.lm))
    reduced = []
    for idx, p in enumerate(final):
        others = final[:idx] + final[idx + 1:]
        r = _reduce(p.terms, others, order, budget, stats)
        reduced.append(_GPoly(r, order))
    out = [Polynomial._raw(variables, p.terms) for p in reduced]
    out.sort(key=lambda p: key(max(p.terms, key=key)), reverse=True)
    return _finish(out, order, variables, cache_key)


def _finish(elements, order, variables, cache_key):
    gb = GroebnerBasis(tuple(elements), order, variables)
    if len(_GB_CACHE) >= _GB_CACHE_MAX:
        _GB_CACHE.pop(next(iter(_GB_CACHE)))
    _GB_CACHE[cache_key] = gb
    return gb


def computed_bases() -> list:
    """Gröbner bases held in the session cache, oldest first."""
    return list(_GB_CACHE.values())


def normal_form(p: Polynomial, basis: GroebnerBasis, budget: Budget | None = None) -> Polynomial:
    """Remainder of ``p`` on multivariate division by ``basis``."""
    if p.variables != basis.variables:
        raise RingMismatchError("polynomial and basis live in different rings")
    if not p.terms:
        return p
    order = basis.order
    gpolys = [_GPoly(dict(g.terms), order) for g in basis.elements]
    r = _reduce(p.terms, gpolys, order, budget or Budget.unlimited(), {})
    return Polynomial._raw(p.variables, r)


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder) -> Polynomial:
    a = _GPoly(dict(f.terms), order)
    b = _GPoly(dict(g.terms), order)
    s, _ = _spoly(a, b)
    return Polynomial._raw(f.variables, s)


def buchberger_criterion(basis: GroebnerBasis) -> bool:
    """True iff every S-polynomial of ``basis`` reduces to zero."""
    els = basis.elements
    for f, g in itertools.combinations(els, 2):
        s = s_polynomial(f, g, basis.order)
        if normal_form(s, basis).terms:
            return False
    return True


# ---------------------------------------------------------------- elimination

def _linear_pivots(g: Polynomial, candidates):
    """Candidate variables occurring in ``g`` only as a bare ``c*v`` term."""
    out = []
    for i in candidates:
        unit = tuple(1 if k == i else 0 for k in range(g.nvars))
        if unit not in g.terms:
            continue
        if all(m == unit or not m[i] for m in g.terms):
            out.append(i)
    return out


def substitute_linear(gens, drop_idx, variables):
    """Remove dropped variables that some generator expresses linearly.

    Returns ``(remaining generators, remaining variables, substitutions)``
    where ``substitutions`` is a list of ``(name, polynomial)`` in order of
    elimination; each polynomial lives in the ring current at that moment.
    """
    gens = [g for g in gens if g.terms]
    variables = tuple(variables)
    drop = {variables[i] for i in drop_idx}
    subs = []
    changed = True
    while changed:
        changed = False
        cand = [i for i, v in enumerate(variables) if v in drop]
        # prefer short pivots so expression swell stays small
        order = sorted(range(len(gens)), key=lambda k: (len(gens[k].terms), k))
        top = max((g.degree() for g in gens), default=0)
        for k, i in ((k, i) for k in order for i in _linear_pivots(gens[k], cand)):
            g = gens[k]
            name = variables[i]
            unit = tuple(1 if j == i else 0 for j in range(len(variables)))
            c = g.terms[unit]
            rest = Polynomial._raw(variables, {m: -v / c for m, v in g.terms.items() if m != unit})
            new_vars = variables[:i] + variables[i + 1:]
            image = rest.in_ring(new_vars)
            new_gens = []
            for j, h in enumerate(gens):
                if j == k:
                    continue
                if h.terms and not h.free_of([name]):
                    h = h.substitute({name: image}, ring=new_vars)
                else:
                    h = h.in_ring(new_vars)
                if h.terms:
                    new_gens.append(h)
            # a substitution that raises the degree usually costs more than it saves
            if max((h.degree() for h in new_gens), default=0) > top:
                continue
            subs.append((name, image))
            gens = new_gens
            variables = new_vars
            drop.discard(name)
            changed = True
            break
    return gens, variables, subs


def eliminate(ideal: IdealHandle, drop: Iterable[str], budget: Budget | None = None) -> IdealHandle:
    """Generators of ``ideal`` intersected with the ring of the kept variables.

    The result lives in the ring of the remaining variables (original order).
    """
    drop = [v for v in ideal.variables if v in set(drop)]
    keep = tuple(v for v in ideal.variables if v not in drop)
    if not drop:
        return ideal
    if not keep:
        raise ValueError("cannot eliminate every variable")
    idx = [ideal.variables.index(v) for v in drop]
    gens, variables, _ = substitute_linear(ideal.generators, idx, ideal.variables)
    remaining_drop = [v for v in variables if v in drop]
    if not gens:
        return IdealHandle([Polynomial(keep)], keep)
    if not remaining_drop:
        return IdealHandle([g.in_ring(keep) for g in gens], keep)
    order = MonomialOrder.elimination(variables, remaining_drop)
    gb = groebner(IdealHandle(gens, variables), order, budget)
    if gb.is_unit():
        return IdealHandle([Polynomial.constant(keep, 1)], keep)
    kept = [g.in_ring(keep) for g in gb.elements if g.free_of(remaining_drop)]
    return IdealHandle(kept or [Polynomial(keep)], keep)


def fresh_names(prefix, count, taken):
    """``count`` names built from ``prefix`` that avoid ``taken``."""
    taken = set(taken)
    while True:
        names = [prefix] if count == 1 else [f"{prefix}{i}" for i in range(1, count + 1)]
        if not taken.intersection(names):
            return names
        prefix = prefix + "_"


def _saturate_single(ideal, j, budget):
    """``ideal : j^inf`` via ``ideal + (1 - t*j)`` and elimination of ``t``."""
    (t,) = fresh_names("_t", 1, ideal.variables)
    ring = (t,) + ideal.variables
    tp = Polynomial.variable(ring, t)
    aux = IdealHandle([g.in_ring(ring) for g in ideal.generators]
                      + [1 - tp * j.in_ring(ring)], ring)
    return eliminate(aux, [t], budget)


def ideal_contains(a: IdealHandle, b: IdealHandle, budget=None) -> bool:
    """Whether every generator of ``b`` lies in ``a``."""
    gb = groebner(a, None, budget)
    return all(gb.contains(g) for g in b.generators)


def intersect(a: IdealHandle, b: IdealHandle, budget: Budget | None = None) -> IdealHandle:
    """``a`` intersected with ``b`` via ``t*a + (1-t)*b`` and elimination of ``t``."""
    if a.variables != b.variables:
        raise RingMismatchError("ideals live in different rings")
    if ideal_contains(b, a, budget):
        return a
    if ideal_contains(a, b, budget):
        return b
    (t,) = fresh_names("_t", 1, a.variables)
    ring = (t,) + a.variables
    tp = Polynomial.variable(ring, t)
    gens = [tp * g.in_ring(ring) for g in a.generators]
    gens += [(1 - tp) * g.in_ring(ring) for g in b.generators]
    return eliminate(IdealHandle(gens, ring), [t], budget)


def saturate(ideal: IdealHandle, by: IdealHandle, budget: Budget | None = None) -> IdealHandle:
    """``ideal : by^inf``, intersected over the generators of ``by``."""
    if ideal.variables != by.variables:
        raise RingMismatchError("ideals live in different rings")
    budget = _budget(budget)
    gb = groebner(ideal, None, budget)
    result = None
    for j in by.nonzero():
        if gb.contains(j):
            continue  # ideal : j^inf is the unit ideal
        part = _saturate_single(ideal, j, budget)
        result = part if result is None else intersect(result, part, budget)
    if result is None:
        return IdealHandle([Polynomial.constant(ideal.variables, 1)], ideal.variables)
    return IdealHandle(groebner(result, None, budget).elements or [Polynomial(ideal.variables)],
                       ideal.variables)


def saturate_variable(ideal: IdealHandle, name: str, budget: Budget | None = None) -> IdealHandle:
    return _saturate_single(ideal, Polynomial.variable(ideal.variables, name), budget)


# ---------------------------------------------------------------- dimension & degree

def _independent_dimension(lms, n):
    if not lms:
        return n
    supports = [frozenset(i for i, e in enumerate(m) if e) for m in lms]
    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            s = set(subset)
            if all(not sup <= s for sup in supports):
                return size
    return 0


def dimension(ideal: IdealHandle, budget: Budget | None = None) -> int:
    """Krull dimension of V(ideal); -1 for the unit ideal."""
    gb = groebner(ideal, None, budget)
    if gb.is_unit():
        return -1
    return _independent_dimension(gb.leading_monomials, len(ideal.variables))


def random_affine_forms(variables, count, rng, lo=-10, hi=10):
    forms = []
    for _ in range(count):
        coeffs = [rng.randint(lo, hi) for _ in variables]
        while not any(coeffs):
            coeffs = [rng.randint(lo, hi) for _ in variables]
        forms.append(Polynomial.linear(variables, coeffs, rng.randint(lo, hi)))
    return forms


def degree_of_variety(ideal: IdealHandle, seed: int = 0, budget: Budget | None = None) -> int:
    """Degree of the top-dimensional part of V(ideal) by generic linear slicing.

    The slice is a zero-dimensional system whose distinct points are counted
    exactly; two independent slices must agree.
    """
    from .solve0d import count_distinct

    budget = _budget(budget)
    k = dimension(ideal, budget)
    if k < 0:
        raise ValueError("the unit ideal has no variety")
    if k == 0:
        return count_distinct(ideal, budget)
    rng = random.Random(seed)
    counts = []
    for _ in range(2):
        sliced = ideal + random_affine_forms(ideal.variables, k, rng)
        counts.append(count_distinct(sliced, budget))
    if counts[0] != counts[1]:
        rng2 = random.Random(seed + 1)
        sliced = ideal + random_affine_forms(ideal.variables, k, rng2)
        third = count_distinct(sliced, budget)
        if third not in counts:
            raise SliceDisagreementError(
                f"generic slices disagree on the degree: {counts + [third]}")
        return third
    return counts[0]


# ---------------------------------------------------------------- text format

def render_ideal(ideal: IdealHandle, header: bool = True) -> str:
    """Newline separated, integer-normalised generators."""
    lines = []
    if header:
        lines.append("# ring: " + ", ".join(ideal.variables))
    gens = ideal.nonzero() or [Polynomial(ideal.variables)]
    for g in gens:
        lines.append(str(g.scale_to_integer()))
    return "\n".join(lines) + "\n"


def parse_ideal(text: str, variables: Sequence[str] | None = None) -> IdealHandle:
    ring = None
    polys = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("ring:"):
                ring = tuple(v.strip() for v in body[5:].split(",") if v.strip())
            continue
        polys.append(stripped)
    variables = tuple(variables) if variables is not None else ring
    if variables is None:
        raise ValueError("ideal text has no ring header and no variables were given")
    return IdealHandle([parse_polynomial(p, variables) for p in polys], variables)
