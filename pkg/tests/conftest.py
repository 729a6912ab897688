import pytest
import sympy

from symdefect.polycore import parse_polynomial
from symdefect.varieties import LinearForm, MidpointProblem, VarietySpec

V3 = ("x1", "x2", "x3")


def poly(text, variables=V3):
    return parse_polynomial(text, variables)


def spec(*equations, variables=V3, n=None):
    return VarietySpec(variables, [poly(e, variables) for e in equations], n)


PARABOLOID = "x3 - x1^2 - x2^2"


def make_problem(f, g, L=None, seed=0):
    return MidpointProblem(spec(f), spec(g), LinearForm(L) if L else None, seed)


@pytest.fixture
def pair_a():
    return make_problem(PARABOLOID, "x3 - x1^2 - 2*x2^2 + 1", L=(0, 0, 1))


@pytest.fixture
def pair_b():
    return make_problem(PARABOLOID, "x3 - 2*x1^2 - 3*x2^2 + 1", L=(1, 4, -7))


@pytest.fixture
def linear_pair():
    return make_problem("x3", "x3 - x1")


def elimination_matches_resultant(f, g, eliminated) -> bool:
    """Compare ``eliminated`` (generators of (f, g) in k[y]) with Res_x(f, g).

    The eliminant's roots must all be resultant roots; the resultant may have
    extra roots only where both leading coefficients in x vanish.
    """
    x, y = sympy.symbols("x y")
    fs, gs = (sympy.Poly(sympy.sympify(str(h).replace("^", "**")), x, y) for h in (f, g))
    res = sympy.Poly(sympy.resultant(fs.as_expr(), gs.as_expr(), x), y)
    gens = [sympy.Poly(sympy.sympify(str(h).replace("^", "**")), y) for h in eliminated]
    if res.is_zero:
        return not gens  # a common factor leaves the elimination ideal zero
    if not gens:
        return False

    def rad(p):
        return sympy.quo(p, sympy.gcd(p, p.diff(y))) if p.degree() > 0 else sympy.Poly(1, y)

    h = rad(gens[0])
    r = rad(res)
    if sympy.rem(r, h).is_zero is False:
        return False
    extra = sympy.quo(r, h)
    if extra.degree() <= 0:
        return True
    lcs = [sympy.Poly(p.as_poly(x).LC(), y) for p in (fs, gs)]
    return all(sympy.gcd(extra, lc).degree() == extra.degree() for lc in lcs)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
