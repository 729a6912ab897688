"""Command-line front end.

Problem files are plain text with labelled sections::

    # quadric pair
    n: 2
    vars: x1, x2, x3
    X:
      x3 - x1^2 - x2^2
    Y:
      x3 - x1^2 - 2*x2^2 + 1
    L: 0, 0, 1
    seed: 0

Exit codes: 0 success, 1 mathematical failure or disagreement, 2 input
error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import chords
from .ideals import Budget, BudgetExceeded, DEFAULT_STEPS, dimension, groebner, render_ideal
from .polycore import ParseError, parse_polynomial
from .varieties import (InadmissibleFormError, LinearForm, MidpointProblem, VarietySpec,
                        check_general_position, check_strong_ci, choose_admissible_L,
                        degree_bounds, k0_closure, l_infinity, l_infinity_degree,
                        surplus_degree)

EXIT_OK, EXIT_MATH, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

_HEADER = re.compile(r"^\s*(n|vars|X|Y|L|seed)\s*:(.*)$")


class InputError(ValueError):
    pass


@dataclass
class ProblemFile:
    n: int
    variables: tuple
    X: tuple
    Y: tuple
    L: tuple | None = None
    seed: int = 0

    def problem(self) -> MidpointProblem:
        X = VarietySpec(self.variables, self.X, self.n)
        Y = VarietySpec(self.variables, self.Y, self.n)
        L = LinearForm(self.L) if self.L else None
        return MidpointProblem(X, Y, L, self.seed)


def parse_problem_text(text: str, source: str = "<problem>") -> ProblemFile:
    sections: dict[str, list] = {}
    current = None
    offset = 0
    for lineno, raw in enumerate(text.splitlines(keepends=True), start=1):
        line_start = offset
        offset += len(raw.encode())
        body = raw.split("#", 1)[0].rstrip("\r\n")
        if not body.strip():
            continue
        m = _HEADER.match(body)
        if m:
            current = m.group(1)
            if current in sections:
                raise InputError(f"{source}:{lineno}: duplicate section {current!r}")
            sections[current] = []
            rest = m.group(2)
            if rest.strip():
                col = len(body[:m.start(2)].encode()) + len(rest) - len(rest.lstrip())
                sections[current].append((rest.strip(), lineno, line_start + col))
            continue
        if current is None:
            raise InputError(f"{source}:{lineno}: text before the first section")
        col = len(body.encode()) - len(body.lstrip().encode())
        sections[current].append((body.strip(), lineno, line_start + col))

    for key in ("n", "vars", "X", "Y"):
        if key not in sections or not sections[key]:
            raise InputError(f"{source}: missing section {key!r}")
    try:
        n = int(sections["n"][0][0])
    except ValueError:
        raise InputError(f"{source}:{sections['n'][0][1]}: n must be an integer") from None
    names = tuple(v.strip() for item in sections["vars"] for v in item[0].split(",") if v.strip())
    if len(names) != 2 * n - 1:
        raise InputError(f"{source}: expected {2 * n - 1} variables for n={n}, got {len(names)}")

    def polys(key):
        out = []
        for text_, lineno, start in sections[key]:
            try:
                out.append(parse_polynomial(text_, names))
            except ParseError as exc:
                raise InputError(f"{source}:{lineno}: byte {start + exc.offset}: {exc}") from None
        if len(out) != n - 1:
            raise InputError(f"{source}: section {key} needs {n - 1} equation(s), got {len(out)}")
        return tuple(out)

    L = None
    if sections.get("L"):
        try:
            L = tuple(Fraction(c.strip()) for c in sections["L"][0][0].split(","))
        except ValueError:
            raise InputError(f"{source}: L must be comma separated rationals") from None
        if len(L) != len(names):
            raise InputError(f"{source}: L needs {len(names)} coefficients")
    seed = 0
    if sections.get("seed"):
        try:
            seed = int(sections["seed"][0][0])
        except ValueError:
            raise InputError(f"{source}: seed must be an integer") from None
    return ProblemFile(n, names, polys("X"), polys("Y"), L, seed)


def load_problem(path: str) -> ProblemFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem_text(text, path)


def parse_point(text: str, m: int) -> tuple:
    """Comma separated rationals; ``re+imj`` entries must have zero imaginary part."""
    out = []
    for item in text.split(","):
        item = item.strip().replace(" ", "")
        try:
            out.append(Fraction(item))
            continue
        except ValueError:
            pass
        try:
            z = complex(item.replace("i", "j"))
        except ValueError:
            raise InputError(f"malformed coordinate {item!r}") from None
        if z.imag != 0:
            raise InputError("exact fiber analysis needs real rational target points")
        out.append(Fraction(z.real))
    if len(out) != m:
        raise InputError(f"point needs {m} coordinates, got {len(out)}")
    return tuple(out)


# ---------------------------------------------------------------- output helpers

def _use_color(stream) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _verdict(ok: bool) -> str:
    word = "PASS" if ok else "FAIL"
    if _use_color(sys.stdout):
        return f"\033[{32 if ok else 31}m{word}\033[0m"
    return word


def _dump(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _emit(args, report: dict, name: str = "report.json"):
    if args.json:
        sys.stdout.write(_dump(report))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(_dump(report))


def _write(args, name: str, text: str):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    return out / name


def _say(args, line: str = ""):
    if not args.json:
        print(line)


def _budget(args) -> Budget:
    return Budget(max_steps=args.budget)


def _problem(args):
    pf = load_problem(args.problem)
    problem = pf.problem()
    if args.seed is not None:
        problem = MidpointProblem(problem.X, problem.Y, problem.L, args.seed)
    return problem


def _pass_checks(problem, budget):
    rx = check_strong_ci(problem.X, budget)
    ry = check_strong_ci(problem.Y, budget)
    gp = check_general_position(problem, budget)
    return rx, ry, gp


def _ensure_L(problem, budget):
    if problem.L is None:
        problem = problem.with_L(choose_admissible_L(problem, budget=budget))
    return problem


# ---------------------------------------------------------------- commands

def cmd_check(args) -> int:
    problem = _problem(args)
    budget = _budget(args)
    rx, ry, gp = _pass_checks(problem, budget)
    report = {"command": "check", "X": _ci_dict(rx), "Y": _ci_dict(ry), "general_position": gp}
    for name, r in (("X", rx), ("Y", ry)):
        _say(args, f"{name} smooth complete intersection: {_verdict(r.smooth)}")
        _say(args, f"{name} leading forms: dim {r.leading_form_dimension}; "
                   f"reading dim = n ({r.n}): {_verdict(r.leading_forms_ok)}; "
                   f"reading dim = m - n ({r.m - r.n}): {_verdict(r.literal_reading_ok)}")
    _say(args, f"general position: {_verdict(gp)}")
    ok = rx.passed and ry.passed and gp
    report["passed"] = ok
    _emit(args, report)
    return EXIT_OK if ok else EXIT_MATH


def _ci_dict(r):
    return {"smooth": r.smooth, "leading_form_dimension": r.leading_form_dimension,
            "leading_forms_ok": r.leading_forms_ok, "literal_reading_ok": r.literal_reading_ok,
            "passed": r.passed}


def _checked_problem(args, budget):
    problem = _problem(args)
    rx, ry, gp = _pass_checks(problem, budget)
    if not (rx.passed and ry.passed and gp):
        print("input fails the strong complete intersection or general position checks",
              file=sys.stderr)
        return None
    return _ensure_L(problem, budget)


def cmd_bifurcation(args) -> int:
    budget = _budget(args)
    problem = _checked_problem(args, budget)
    if problem is None:
        return EXIT_MATH
    report = {"command": "bifurcation", "L": [str(c) for c in problem.L.coefficients]}
    _say(args, f"L = {problem.L}")
    try:
        k0 = k0_closure(problem, budget)
        path = _write(args, "k0_closure.ideal", render_ideal(k0))
        k0_unit = groebner(k0, None, budget).is_unit()
        report["k0_closure"] = render_ideal(k0, header=False).splitlines()
        _say(args, f"K0 closure -> {path}")
        for line in render_ideal(k0, header=False).splitlines():
            _say(args, f"  {line}")
        linf = l_infinity(problem, budget)
        path = _write(args, "l_infinity.ideal", render_ideal(linf))
        report["l_infinity"] = render_ideal(linf, header=False).splitlines()
        _say(args, f"L-infinity -> {path}")
        for line in render_ideal(linf, header=False).splitlines():
            _say(args, f"  {line}")
        deg_linf, empty = l_infinity_degree(problem, budget)
        D = surplus_degree(problem, budget)
        mu, reports = chords.mu_invariant(problem, samples=args.samples, seed=problem.seed,
                                          budget=budget, return_reports=True)
        bounds = degree_bounds(problem, D, reports[0].d, mu, deg_linf, empty)
    except BudgetExceeded as exc:
        report["partial"] = True
        report["error"] = str(exc)
        _emit(args, report)
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    report["bounds"] = bounds.as_dict()
    report["k0_dimension"] = dimension(k0, budget)
    _say(args, f"deg L-infinity = {'empty' if empty else deg_linf}; D = {D}; d = {bounds.d}; mu = {mu}")
    if bounds.empty_forced:
        _say(args, f"bound: L∞ empty (product formula gives {bounds.product_bound})")
    else:
        _say(args, f"bound: deg L∞ ≤ {bounds.product_bound} (product formula)")
    if bounds.refined_bound is not None and not bounds.empty_forced:
        _say(args, f"bound: deg L∞ ≤ {bounds.bound()} (min with D + d - mu = {bounds.refined_bound})")
    if k0_unit and empty:
        _say(args, "B superset empty")
    ok = bounds.consistent()
    _say(args, f"degree bound consistent: {_verdict(ok)}")
    _emit(args, report)
    return EXIT_OK if ok else EXIT_MATH


def cmd_chords(args) -> int:
    budget = _budget(args)
    problem = _checked_problem(args, budget)
    if problem is None:
        return EXIT_MATH
    p = parse_point(args.point, problem.m)
    try:
        rep = chords.euler_characteristic(problem, p, budget, seed=problem.seed)
    except chords.OnK0ClosureError as exc:
        print(f"{exc} (residual {exc.residual:.3e})", file=sys.stderr)
        _emit(args, {"command": "chords", "p": [str(v) for v in p], "status": "on_K0_closure"})
        return EXIT_MATH
    data = rep.as_dict()
    data["command"] = "chords"
    _say(args, f"p = ({', '.join(str(v) for v in rep.p)})  L = {rep.L}")
    _say(args, f"d = {rep.d}")
    _say(args, f"r = {rep.r}")
    _say(args, f"rho = {','.join(str(r) for r in rep.rho)}")
    _say(args, "delta = " + ", ".join(_fmt_complex(c) for c in rep.branch_values))
    _say(args, f"chi = {rep.chi}")
    _say(args, f"status = {rep.status}")
    _emit(args, data)
    return EXIT_OK


def _fmt_complex(c: complex) -> str:
    re_, im = round(c.real, 12) + 0.0, round(c.imag, 12) + 0.0
    return f"{re_:.12g}" if im == 0 else f"{re_:.12g}{im:+.12g}i"


def _alias_axis(part: str, alias: dict) -> str:
    axis, sep, rest = part.partition("=")
    return alias.get(axis.strip(), axis.strip()) + sep + rest


def cmd_scan(args) -> int:
    budget = _budget(args)
    problem = _checked_problem(args, budget)
    if problem is None:
        return EXIT_MATH
    base = parse_point(args.base, problem.m) if args.base else None
    try:
        # the file's own variable names are accepted as aliases for z1, z2, ...
        alias = dict(zip(problem.source_vars, problem.z_vars))
        text = ",".join(_alias_axis(part, alias) for part in args.grid.split(","))
        grid = chords.GridSpec.parse(text, problem.z_vars, base)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    result = chords.scan(problem, grid, seed=problem.seed, workers=args.workers,
                         cell_seconds=args.cell_seconds, budget=budget)
    csv_text = result.to_csv()
    if args.out:
        _write(args, "scan.csv", csv_text)
    elif not args.json:
        sys.stdout.write(csv_text)
    report = {
        "command": "scan",
        "axes": [{"axis": problem.z_vars[a.index], "lo": str(a.lo), "hi": str(a.hi), "cells": a.cells}
                 for a in grid.axes],
        "chi_values": result.generic_values(),
        "marked": [[str(v) for v in c.values] for c in result.marked()],
        "failed": sum(c.status == "failed" for c in result.cells),
        "jumps": [[str(v) for v in result.cells[k].values] for k in result.jumps],
    }
    _emit(args, report)
    print(f"chi values {report['chi_values']}; {len(report['marked'])} marked, "
          f"{report['failed']} failed, {len(report['jumps'])} jump cell(s)", file=sys.stderr)
    return EXIT_MATH if result.jumps else EXIT_OK


def cmd_generic_h(args) -> int:
    budget = _budget(args)
    problem = _problem(args)
    try:
        trials = chords.generic_h_experiment(problem.X, problem.Y, trials=args.trials,
                                             seed=problem.seed, samples=args.samples, budget=budget)
    except chords.MuDisagreementError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MATH
    except RuntimeError as exc:
        if isinstance(exc, BudgetExceeded):
            raise
        print(str(exc), file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MATH
    rows = []
    for k, t in enumerate(trials, start=1):
        H = [[str(c) for c in row] for row in t.H]
        rows.append({"H": H, "status": t.status, "mu": t.mu,
                     "L": [str(c) for c in t.L.coefficients] if t.L else None})
        if t.status == "ok":
            _say(args, f"H#{k}: mu = {t.mu}")
        else:
            _say(args, f"H#{k}: skipped ({t.message})")
    _say(args, "numeric consequence only: equal mu across H (fiber homeomorphism not certified)")
    _emit(args, {"command": "generic-h", "trials": rows})
    return EXIT_OK


def cmd_transport(args) -> int:
    budget = _budget(args)
    problem = _checked_problem(args, budget)
    if problem is None:
        return EXIT_MATH
    p0 = parse_point(args.from_, problem.m)
    p1 = parse_point(args.to, problem.m)
    try:
        start = chords.start_point(problem, p0, seed=problem.seed, budget=budget)
        res = chords.transport_fiber_point(problem, p0, p1, start, steps=args.steps, budget=budget)
    except chords.TransportError as exc:
        print(f"transport failed: {exc}", file=sys.stderr)
        return EXIT_MATH
    moved = float(np.max(np.abs(res.end - res.start))) if p0 == p1 else None
    report = {
        "command": "transport",
        "from": [str(v) for v in p0],
        "to": [str(v) for v in p1],
        "steps": args.steps,
        "start": [[float(z.real), float(z.imag)] for z in res.start],
        "end": [[float(z.real), float(z.imag)] for z in res.end],
        "max_residual": res.max_residual,
        "max_L_drift": res.max_L_drift,
        "max_phi_error": res.max_phi_error,
    }
    names = problem.source_vars
    _say(args, "start: " + ", ".join(f"{v}={_fmt_complex(z)}" for v, z in zip(names, res.start)))
    _say(args, "end:   " + ", ".join(f"{v}={_fmt_complex(z)}" for v, z in zip(names, res.end)))
    _say(args, f"max residual {res.max_residual:.3e}; L drift {res.max_L_drift:.3e}; "
               f"midpoint error {res.max_phi_error:.3e}")
    if moved is not None:
        _say(args, f"identity transport moved the point by {moved:.3e}")
    _emit(args, report)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file")
    common.add_argument("--seed", type=int, default=None, help="override the file's seed")
    common.add_argument("--budget", type=int, default=DEFAULT_STEPS,
                        help="Buchberger step budget (default %(default)s)")
    common.add_argument("--out", help="directory for reports, ideal files and CSV")
    common.add_argument("--json", action="store_true", help="print the JSON report to stdout")

    parser = argparse.ArgumentParser(
        prog="symdefect", description="Chord fibers of the midpoint map of two affine varieties.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="strong complete intersection and general position")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bifurcation", parents=[common], help="K0 closure, L-infinity and degree bounds")
    p.add_argument("--samples", type=int, default=5, help="generic points for mu (default %(default)s)")
    p.set_defaults(func=cmd_bifurcation)

    p = sub.add_parser("chords", parents=[common], help="Euler characteristic of one chord fiber")
    p.add_argument("--point", required=True, help="target point, e.g. 0,0,1/2")
    p.set_defaults(func=cmd_chords)

    p = sub.add_parser("scan", parents=[common], help="Euler characteristic over a 1D or 2D grid")
    p.add_argument("--grid", required=True, help="axis=lo:hi:cells[,axis=lo:hi:cells]")
    p.add_argument("--base", help="base point for the axes not scanned (default origin)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cell-seconds", type=float, default=60.0, help="time budget per cell")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("generic-h", parents=[common], help="mu of (X, H(Y)) for random linear H")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--samples", type=int, default=10, help="generic points per trial")
    p.set_defaults(func=cmd_generic_h)

    p = sub.add_parser("transport", parents=[common], help="carry a fiber point along a segment")
    p.add_argument("--from", dest="from_", required=True, help="start target point")
    p.add_argument("--to", required=True, help="end target point")
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_transport)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InadmissibleFormError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
