import json
import subprocess
import sys
from pathlib import Path

import pytest

from symdefect.cli import main, parse_problem_text, InputError

PAIR_A = """# quadric pair A
n: 2
vars: x1, x2, x3
X:
  x3 - x1^2 - x2^2
Y:
  x3 - x1^2 - 2*x2^2 + 1
L: 0, 0, 1
seed: 0
"""

PAIR_B = PAIR_A.replace("x3 - x1^2 - 2*x2^2 + 1", "x3 - 2*x1^2 - 3*x2^2 + 1").replace("L: 0, 0, 1\n", "")
LINEAR = "n: 2\nvars: x1, x2, x3\nX: x3\nY: x3 - x1\n"
SAME = "n: 2\nvars: x1, x2, x3\nX: x3 - x1^2 - x2^2\nY: x3 - x1^2 - x2^2\nseed: 7\n"


@pytest.fixture
def write(tmp_path):
    def _write(text, name="problem.txt"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_problem_file_sections():
    pf = parse_problem_text(PAIR_A)
    assert pf.n == 2 and pf.variables == ("x1", "x2", "x3")
    assert str(pf.X[0]) == "-x1^2 - x2^2 + x3"
    assert pf.L == (0, 0, 1) and pf.seed == 0


def test_problem_file_errors():
    with pytest.raises(InputError):
        parse_problem_text("n: 2\nvars: x1, x2\nX: x1\nY: x2\n")
    with pytest.raises(InputError):
        parse_problem_text("n: 2\nvars: x1, x2, x3\nX: x1\n")
    with pytest.raises(InputError):
        parse_problem_text("n: 2\nvars: x1, x2, x3\nX: x1\n  x2\nY: x3\n")


def test_check_passes_on_pair_a(write, capsys):
    code, out, _ = run(capsys, "check", write(PAIR_A))
    assert code == 0
    assert "general position: PASS" in out
    assert "reading dim = m - n (1): FAIL" in out


def test_check_fails_when_cones_coincide(write, capsys):
    code, out, _ = run(capsys, "check", write(SAME))
    assert code == 1
    assert "general position: FAIL" in out


def test_malformed_polynomial_reports_byte_offset(write, capsys):
    text = PAIR_A.replace("x3 - x1^2 - x2^2", "x3 - x1^^2 - x2^2")
    code, _, err = run(capsys, "check", write(text))
    assert code == 2
    offset = int(err.split("byte ")[1].split(":")[0])
    assert text.encode()[offset:offset + 1] == b"^"
    assert text.encode()[offset - 1:offset] == b"^"


def test_unknown_variable_and_bad_point(write, capsys):
    code, _, err = run(capsys, "check", write(PAIR_A.replace("x2^2 + 1", "w^2 + 1")))
    assert code == 2 and "w" in err
    code, _, _ = run(capsys, "chords", write(PAIR_A), "--point", "0,0")
    assert code == 2
    code, _, _ = run(capsys, "chords", write(PAIR_A), "--point", "0,1+2i,0")
    assert code == 2


def test_bifurcation_pair_a(write, capsys, tmp_path):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "bifurcation", write(PAIR_A), "--out", str(out_dir))
    assert code == 0
    assert "deg L∞ ≤ 7" in out
    k0 = (out_dir / "k0_closure.ideal").read_text().splitlines()
    assert k0 == ["# ring: z1, z2, z3", "6*z1^2 + 8*z2^2 - 6*z3 - 3"]
    report = json.loads((out_dir / "report.json").read_text())
    assert report["bounds"]["product_bound"] == 7 and report["bounds"]["consistent"]


def test_bifurcation_pair_b(write, capsys, tmp_path):
    code, _, _ = run(capsys, "bifurcation", write(PAIR_B), "--out", str(tmp_path / "b"))
    assert code == 0
    k0 = (tmp_path / "b" / "k0_closure.ideal").read_text().splitlines()[1]
    assert k0 == "8*z1^2 + 9*z2^2 - 6*z3 - 3"


def test_bifurcation_linear(write, capsys, tmp_path):
    code, out, _ = run(capsys, "bifurcation", write(LINEAR), "--out", str(tmp_path / "l"))
    assert code == 0
    assert "B superset empty" in out
    assert (tmp_path / "l" / "l_infinity.ideal").read_text().splitlines()[1] == "1"


def test_budget_exhaustion_exits_3(write, capsys, tmp_path):
    code, _, err = run(capsys, "bifurcation", write(PAIR_A), "--budget", "20",
                       "--out", str(tmp_path / "partial"))
    assert code == 3
    assert "budget" in err


def test_chords_report(write, capsys):
    code, out, _ = run(capsys, "chords", write(PAIR_A), "--point", "0,0,0")
    assert code == 0
    lines = out.splitlines()
    assert "d = 4" in lines and "r = 4" in lines and "rho = 2,2,2,2" in lines and "chi = 0" in lines
    assert "delta = 0.5, 0.333333333333" in lines


def test_chords_on_k0_exits_1(write, capsys):
    code, _, err = run(capsys, "chords", write(PAIR_A), "--point", "0,0,-1/2")
    assert code == 1 and "K0" in err


def test_reports_are_deterministic(write, capsys):
    path = write(PAIR_A)
    first = run(capsys, "chords", path, "--point", "1/3,-1/5,2/7", "--json", "--seed", "5")
    second = run(capsys, "chords", path, "--point", "1/3,-1/5,2/7", "--json", "--seed", "5")
    assert first == second and first[0] == 0
    assert json.loads(first[1])["chi"] == 0


def test_scan_csv(write, capsys):
    code, out, _ = run(capsys, "scan", write(PAIR_A), "--grid", "z3=-1:1:41")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "axis1,axis2,chi,status"
    assert [r for r in rows if r.endswith("on_K0_closure")] == ["-0.5,,,on_K0_closure"]


def test_scan_accepts_file_variable_names(write, capsys):
    by_alias = run(capsys, "scan", write(PAIR_A), "--grid", "x3=-1:1:5")
    by_index = run(capsys, "scan", write(PAIR_A), "--grid", "3=-1:1:5")
    assert by_alias == by_index and by_alias[0] == 0


def test_transport_identity(write, capsys):
    code, out, _ = run(capsys, "transport", write(PAIR_A), "--from", "0,0,0", "--to", "0,0,0",
                       "--steps", "10", "--json")
    assert code == 0
    report = json.loads(out)
    assert report["start"] == report["end"]


def test_generic_h_on_identical_paraboloids(write, capsys):
    code, out, _ = run(capsys, "generic-h", write(SAME), "--trials", "5", "--seed", "7")
    assert code == 0
    mus = [line for line in out.splitlines() if line.startswith("H#")]
    assert len(mus) == 5
    assert len({line.split("=")[1] for line in mus}) == 1


def test_console_script_and_no_color(write):
    env = {"NO_COLOR": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "symdefect", "check", write(PAIR_A)],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "\033[" not in proc.stdout
