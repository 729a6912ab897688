"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` lives in a ring given by an ordered tuple of variable
names and stores its terms as ``{exponent tuple: mpq}``.  Instances are
treated as immutable values.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import gmpy2
from gmpy2 import mpq

__all__ = [
    "QQ",
    "to_rational",
    "Polynomial",
    "PolyMatrix",
    "ParseError",
    "RingMismatchError",
    "ZeroPolynomialError",
    "parse_polynomial",
    "highest_homogeneous_component",
    "jacobian",
    "evaluate_complex",
    "grevlex_key",
]

QQ = mpq


class PolynomialError(ValueError):
    pass


class ParseError(PolynomialError):
    """Malformed polynomial text.  ``offset`` is a byte offset into the input."""

    def __init__(self, message, offset, text=""):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.text = text


class UnknownVariableError(ParseError):
    def __init__(self, name, offset, text=""):
        super().__init__(f"unknown variable {name!r}", offset, text)
        self.name = name


class RingMismatchError(PolynomialError):
    pass


class ZeroPolynomialError(PolynomialError):
    pass


def to_rational(value) -> mpq:
    """Coerce ints, Fractions, mpq and ``'a/b'`` strings to ``mpq``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, Fraction)) or type(value) is type(QQ(0)):
        return QQ(value)
    if isinstance(value, str):
        return QQ(value.strip())
    if type(value).__name__ == "mpz":
        return QQ(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def grevlex_key(mono):
    """Sort key realising graded reverse lexicographic order."""
    return (sum(mono), tuple(-e for e in reversed(mono)))


def _mono_str(variables, mono):
    parts = []
    for name, e in zip(variables, mono):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


class Polynomial:
    __slots__ = ("variables", "terms", "_hash", "_horner")

    def __init__(self, variables: Sequence[str], terms: Mapping | None = None):
        self.variables = tuple(variables)
        clean = {}
        if terms:
            n = len(self.variables)
            for mono, c in terms.items():
                mono = tuple(mono)
                if len(mono) != n:
                    raise RingMismatchError(
                        f"monomial {mono} does not match {n} variables")
                c = c if type(c) is type(QQ(0)) else to_rational(c)
                if c:
                    clean[mono] = c
        self.terms = clean
        self._hash = None
        self._horner = None

    # construction helpers
    @classmethod
    def constant(cls, variables, value) -> "Polynomial":
        n = len(tuple(variables))
        return cls(variables, {(0,) * n: value})

    @classmethod
    def variable(cls, variables, name) -> "Polynomial":
        variables = tuple(variables)
        idx = variables.index(name)
        mono = tuple(1 if i == idx else 0 for i in range(len(variables)))
        return cls(variables, {mono: 1})

    @classmethod
    def linear(cls, variables, coefficients, constant=0) -> "Polynomial":
        variables = tuple(variables)
        n = len(variables)
        terms = {}
        for i, c in enumerate(coefficients):
            mono = tuple(1 if j == i else 0 for j in range(n))
            terms[mono] = to_rational(c)
        terms[(0,) * n] = to_rational(constant)
        return cls(variables, terms)

    @classmethod
    def _raw(cls, variables, terms):
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj.variables = variables
        obj.terms = terms
        obj._hash = None
        obj._horner = None
        return obj

    # basic properties
    @property
    def nvars(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self):
        """Total degree; ``-inf`` for the zero polynomial."""
        if not self.terms:
            return -math.inf
        return max(sum(m) for m in self.terms)

    def degree_in(self, name) -> int:
        i = self.variables.index(name)
        return max((m[i] for m in self.terms), default=0)

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> mpq:
        return self.terms.get((0,) * self.nvars, QQ(0))

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self.terms}) <= 1

    def support(self) -> set[int]:
        """Indices of variables that occur."""
        used = set()
        for m in self.terms:
            used.update(i for i, e in enumerate(m) if e)
        return used

    def free_of(self, names) -> bool:
        idx = {self.variables.index(v) for v in names}
        return not (self.support() & idx)

    def sorted_terms(self, key=grevlex_key):
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, key=grevlex_key):
        if not self.terms:
            raise ZeroPolynomialError("zero polynomial has no leading term")
        mono = max(self.terms, key=key)
        return mono, self.terms[mono]

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise RingMismatchError(
                    f"ring {other.variables} differs from {self.variables}")
            return other
        return Polynomial.constant(self.variables, to_rational(other))

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m, 0) + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return Polynomial._raw(self.variables, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.variables, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = to_rational(other)
            if not c:
                return Polynomial._raw(self.variables, {})
            return Polynomial._raw(self.variables, {m: v * c for m, v in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, 0) + c1 * c2
        return Polynomial._raw(self.variables, {m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            raise TypeError("use exact_divide for polynomial division")
        c = to_rational(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self * (1 / c)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.variables, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self.terms == other.terms
        try:
            c = to_rational(other)
        except TypeError:
            return NotImplemented
        return self.terms == ({(0,) * self.nvars: c} if c else {})

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.variables, frozenset(self.terms.items())))
        return self._hash

    # structure
    def homogeneous_component(self, degree: int) -> "Polynomial":
        return Polynomial._raw(
            self.variables, {m: c for m, c in self.terms.items() if sum(m) == degree})

    def leading_form(self) -> "Polynomial":
        if not self.terms:
            raise ZeroPolynomialError("the zero polynomial has no leading form")
        return self.homogeneous_component(self.degree())

    def diff(self, name) -> "Polynomial":
        i = self.variables.index(name) if isinstance(name, str) else name
        terms = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = m[:i] + (e - 1,) + m[i + 1:]
                terms[mm] = c * e
        return Polynomial._raw(self.variables, terms)

    def scale_to_integer(self) -> "Polynomial":
        """Primitive integer multiple whose grevlex leading coefficient is positive."""
        if not self.terms:
            return self
        den = 1
        for c in self.terms.values():
            den = gmpy2.lcm(den, c.denominator)
        nums = [c * den for c in self.terms.values()]
        g = 0
        for v in nums:
            g = gmpy2.gcd(g, v.numerator)
        _, lc = self.leading_term()
        sign = 1 if lc > 0 else -1
        factor = QQ(den * sign, g)
        return self * factor

    def monic(self, key=grevlex_key) -> "Polynomial":
        _, lc = self.leading_term(key)
        return self * (1 / lc)

    # change of ring and substitution
    def in_ring(self, variables: Sequence[str]) -> "Polynomial":
        """Re-express over ``variables`` (must contain every used variable)."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        pos = {v: i for i, v in enumerate(variables)}
        used = self.support()
        for i in used:
            if self.variables[i] not in pos:
                raise RingMismatchError(
                    f"variable {self.variables[i]!r} missing from target ring")
        mapping = [pos.get(v) for v in self.variables]
        n = len(variables)
        terms = {}
        for m, c in self.terms.items():
            mm = [0] * n
            for i, e in enumerate(m):
                if e:
                    mm[mapping[i]] += e
            terms[tuple(mm)] = c
        return Polynomial._raw(variables, terms)

    def substitute(self, values: Mapping[str, object], ring=None) -> "Polynomial":
        """Replace variables by polynomials or constants.

        Substituted polynomials must live in ``ring`` (default: this ring).
        Variables not mentioned are kept and carried into ``ring``.
        """
        ring = tuple(ring) if ring is not None else self.variables
        images = []
        for v in self.variables:
            if v in values:
                val = values[v]
                if isinstance(val, Polynomial):
                    images.append(val.in_ring(ring) if val.variables != ring else val)
                else:
                    images.append(Polynomial.constant(ring, to_rational(val)))
            else:
                images.append(Polynomial.variable(ring, v))
        powers = [dict() for _ in images]

        def power(i, e):
            cache = powers[i]
            if e not in cache:
                cache[e] = images[i] ** e
            return cache[e]

        result = Polynomial(ring)
        acc = {}
        for m, c in self.terms.items():
            term = Polynomial.constant(ring, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            for mm, cc in term.terms.items():
                acc[mm] = acc.get(mm, 0) + cc
        result = Polynomial._raw(ring, {m: c for m, c in acc.items() if c})
        return result

    def evaluate(self, point) -> mpq:
        """Exact evaluation at a rational point."""
        point = [to_rational(v) for v in point]
        if len(point) != self.nvars:
            raise RingMismatchError("point dimension mismatch")
        total = QQ(0)
        for m, c in self.terms.items():
            t = c
            for v, e in zip(point, m):
                if e:
                    t *= v ** e
            total += t
        return total

    def evaluate_complex(self, point) -> complex:
        return evaluate_complex(self, point)

    def coefficient_norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    # rendering
    def __str__(self):
        return render_polynomial(self)

    def __repr__(self):
        return f"Polynomial({str(self)!r}, vars={','.join(self.variables)})"


def render_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    out = []
    for k, (m, c) in enumerate(p.sorted_terms()):
        neg = c < 0
        a = -c if neg else c
        ms = _mono_str(p.variables, m)
        if not ms:
            body = str(a)
        elif a == 1:
            body = ms
        else:
            body = f"{a}*{ms}"
        if k == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


# ---------------------------------------------------------------- parsing

class _Parser:
    # expr := term (('+'|'-') term)*
    # term := unary ('*' unary)*
    # unary := ('+'|'-') unary | power
    # power := atom ('^' INT)?
    # atom := INT ('/' INT)? | IDENT | '(' expr ')'

    def __init__(self, text, variables):
        self.text = text
        self.variables = tuple(variables)
        self.index = {v: i for i, v in enumerate(self.variables)}
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _offset(self, char_pos):
        return len(self.text[:char_pos].encode("utf-8"))

    def _tokenize(self, text):
        toks = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                toks.append(("INT", text[i:j], i))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                toks.append(("IDENT", text[i:j], i))
                i = j
            elif ch in "+-*^/()":
                toks.append((ch, ch, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", self._offset(i), text)
        toks.append(("END", "", len(text)))
        return toks

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "END" else repr(tok[1])
            raise ParseError(f"expected {kind}, found {what}",
                             self._offset(tok[2]), self.text)
        self.pos += 1
        return tok

    def parse(self):
        if self.peek()[0] == "END":
            raise ParseError("empty expression", 0, self.text)
        value = self.expr()
        tok = self.peek()
        if tok[0] != "END":
            raise ParseError(f"unexpected {tok[1]!r}", self._offset(tok[2]), self.text)
        return value

    def expr(self):
        value = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "END":
            op = self.take()[0]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.unary()
        while self.peek()[0] == "*":
            self.take()
            value = value * self.unary()
        return value

    def unary(self):
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return -self.unary()
        if kind == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            exp_tok = self.take("INT")
            base = base ** int(exp_tok[1])
        return base

    def atom(self):
        tok = self.peek()
        kind = tok[0]
        if kind == "INT":
            self.take()
            num = int(tok[1])
            if self.peek()[0] == "/":
                self.take()
                den_tok = self.take("INT")
                den = int(den_tok[1])
                if den == 0:
                    raise ParseError("zero denominator", self._offset(den_tok[2]), self.text)
                return Polynomial.constant(self.variables, QQ(num, den))
            return Polynomial.constant(self.variables, num)
        if kind == "IDENT":
            self.take()
            if tok[1] not in self.index:
                raise UnknownVariableError(tok[1], self._offset(tok[2]), self.text)
            return Polynomial.variable(self.variables, tok[1])
        if kind == "(":
            self.take()
            value = self.expr()
            self.take(")")
            return value
        what = "end of input" if kind == "END" else repr(tok[1])
        raise ParseError(f"unexpected {what}", self._offset(tok[2]), self.text)


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``text`` over the ordered variable names ``variables``.

    >>> str(parse_polynomial("3/2*x1*x3 + x2^2", ["x1", "x2", "x3"]))
    '3/2*x1*x3 + x2^2'
    """
    return _Parser(text, variables).parse()


def highest_homogeneous_component(p: Polynomial) -> Polynomial:
    """Sum of the terms of top total degree (the leading form ``p_*``)."""
    return p.leading_form()


# ---------------------------------------------------------------- matrices

class PolyMatrix:
    """Rectangular grid of polynomials over one ring."""

    __slots__ = ("rows", "variables")

    def __init__(self, rows: Iterable[Iterable[Polynomial]]):
        rows = [list(r) for r in rows]
        if not rows:
            raise ValueError("empty matrix")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
        rings = {p.variables for r in rows for p in r}
        if len(rings) != 1:
            raise RingMismatchError("matrix entries live in different rings")
        self.rows = rows
        self.variables = rings.pop()

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def submatrix(self, rows, cols) -> "PolyMatrix":
        return PolyMatrix([[self.rows[i][j] for j in cols] for i in rows])

    def determinant(self) -> Polynomial:
        nrows, ncols = self.shape
        if nrows != ncols:
            raise ValueError("determinant of a non-square matrix")
        return _det(self.rows, self.variables)

    def minors(self, size: int) -> list[Polynomial]:
        nrows, ncols = self.shape
        out = []
        for rows in combinations(range(nrows), size):
            for cols in combinations(range(ncols), size):
                out.append(_det([[self.rows[i][j] for j in cols] for i in rows],
                                self.variables))
        return out

    def maximal_minors(self) -> list[Polynomial]:
        return self.minors(min(self.shape))

    def evaluate_complex(self, point):
        import numpy as np
        return np.array([[evaluate_complex(p, point) for p in r] for r in self.rows],
                        dtype=complex)


def _det(rows, variables):
    # row-by-row Laplace expansion memoised on the set of used columns
    n = len(rows)
    zero = Polynomial(variables)
    layer = {0: Polynomial.constant(variables, 1)}
    for i in range(n):
        nxt = {}
        for used, acc in layer.items():
            for j in range(n):
                if used >> j & 1:
                    continue
                entry = rows[i][j]
                if not entry.terms:
                    continue
                # sign: number of used columns to the right of j
                sign = -1 if bin(used >> (j + 1)).count("1") % 2 else 1
                key = used | (1 << j)
                contrib = acc * entry
                if sign < 0:
                    contrib = -contrib
                nxt[key] = nxt.get(key, zero) + contrib
        layer = nxt
        if not layer:
            return zero
    return layer.get((1 << n) - 1, zero)


def jacobian(system: Sequence[Polynomial], variables: Sequence[str] | None = None) -> PolyMatrix:
    """Exact Jacobian; entry ``(i, j)`` is d(system[i]) / d(variables[j])."""
    system = list(system)
    if not system:
        raise ValueError("empty system")
    ring = system[0].variables
    if any(p.variables != ring for p in system):
        raise RingMismatchError("system polynomials live in different rings")
    variables = ring if variables is None else tuple(variables)
    return PolyMatrix([[p.diff(v) for v in variables] for p in system])


# ---------------------------------------------------------------- evaluation

def _horner_scheme(terms, nvars, var=0):
    # nested (exponent, subscheme) lists keyed on successive variables
    if var == nvars:
        return complex(sum(terms.values()))
    groups = {}
    for m, c in terms.items():
        groups.setdefault(m[var], {})[m] = c
    return [(e, _horner_scheme(groups[e], nvars, var + 1))
            for e in sorted(groups, reverse=True)]


def _horner_eval(scheme, point, var=0):
    if not isinstance(scheme, list):
        return scheme
    x = point[var]
    acc = 0j
    prev = None
    for e, sub in scheme:
        if prev is not None:
            acc *= x ** (prev - e)
        acc += _horner_eval(sub, point, var + 1)
        prev = e
    if prev:
        acc *= x ** prev
    return acc


def evaluate_complex(p: Polynomial, point) -> complex:
    """Double-precision complex evaluation by nested Horner steps."""
    point = [complex(v) for v in point]
    if len(point) != p.nvars:
        raise RingMismatchError(
            f"point has {len(point)} coordinates, ring has {p.nvars}")
    if not p.terms:
        return 0j
    if p._horner is None:
        p._horner = _horner_scheme(p.terms, p.nvars)
    return _horner_eval(p._horner, point)
