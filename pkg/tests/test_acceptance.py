"""End-to-end acceptance checks, one test per criterion.

The expensive CLI runs are shared between criteria through module-scoped
fixtures.  Each test records a PASS/FAIL line that is repeated in the
terminal summary.
"""

import io
import re
import time

import numpy as np
import pytest

from equisfl.cli import run
from equisfl.ham_model import (
    _block_shooting,
    build_homoclinic_example,
    build_reduced_family,
    detect_homoclinic_crossings,
    explicit_kernel,
)
from equisfl.properties import run_property_suite


def cli(args, out_dir, parallel=1):
    out, err = io.StringIO(), io.StringIO()
    start = time.perf_counter()
    code = run(list(args) + ["--out", str(out_dir), "--no-timestamp", "--parallel", str(parallel)],
               out, err)
    return code, out.getvalue(), err.getvalue(), time.perf_counter() - start


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def ham_run(workdir):
    return cli(["ham", "--preset", "pejsachowicz-loop"], workdir / "ham1")


@pytest.fixture(scope="module")
def afi_run(workdir):
    return cli(["pde", "--preset", "afi", "--modes", "64"], workdir / "afi1")


@pytest.fixture(scope="module")
def even_run(workdir):
    return cli(["pde", "--preset", "even-bifurcation", "--modes", "64"], workdir / "even1")


def block_lines(report, label):
    lines = report.splitlines()
    start = next(i for i, l in enumerate(lines) if l.startswith(f"block {label}:"))
    end = next((i for i in range(start + 1, len(lines)) if not lines[i].startswith(" ")), len(lines))
    return lines[start:end]


def crossing_fields(line):
    m = re.search(r"lambda\* = (\S+), kernel dim (\d+), form \[([^\]]*)\], signature (\S+)", line)
    lam, dim, form, sig = m.groups()
    return float(lam), int(dim), [float(x) for x in form.split(",")], sig


def test_criterion_1_homoclinic_example(ham_run, acceptance):
    code, report, err, seconds = ham_run
    fixed = block_lines(report, "fixed")
    anti = block_lines(report, "anti")
    crossings = [l for l in fixed if l.strip().startswith("crossing ")]
    lam, dim, form, sig = crossing_fields(crossings[0]) if len(crossings) == 1 else (1, 0, [0], "")
    pathway = [int(x) for x in re.findall(r"= (-?\d+)", fixed[0])]
    anti_pathway = [int(x) for x in re.findall(r"= (-?\d+)", anti[0])]
    ok = (code == 0 and "sfl = 0" in report.splitlines() and "sfl_G = (0, -1)" in report
          and len(crossings) == 1 and abs(lam) < 1e-6 and dim == 1 and form[0] < 0 and sig == "-1"
          and len(set(pathway)) == 1 and len(set(anti_pathway)) == 1 and "pathways: agree" in report
          and "verdict: bifurcation_certified" in report and seconds < 60.0)
    acceptance(1, ok, f"sfl = 0, sfl_G = (0, -1), fixed-block crossing at lambda* = {lam:.2e} with "
                      f"form {form[0]:.8f}, pathways {pathway} / {anti_pathway}, {seconds:.1f} s")
    assert ok, report + err


def test_criterion_2_kernel_fidelity(acceptance):
    p = build_reduced_family()
    (c,) = detect_homoclinic_crossings(p)
    t = np.linspace(-8.0, 8.0, 4001)
    u = np.array([c.kernel(float(x))[:, 0] for x in t])
    exact = np.zeros_like(u)
    exact[:, 0] = explicit_kernel(t)
    # both normalised in the same trapezoidal L2 product on the shooting grid
    g = c.t
    w = np.full(g.size, g[1] - g[0])
    w[[0, -1]] *= 0.5
    exact /= np.sqrt(np.sum(w * explicit_kernel(g) ** 2))
    err = float(np.abs(u - exact).max())
    ok = err < 1e-6
    acceptance(2, ok, f"sup-norm error {err:.2e} on [-8, 8] at lambda* = {c.lambda_star:.1e}")
    assert ok


def test_criterion_3_no_bifurcation_example(afi_run, acceptance):
    code, report, err, _ = afi_run
    lines = report.splitlines()
    crossing = [l for l in lines if l.strip().startswith("crossing 1:")]
    ok = code == 0 and "sfl = 0" in lines and len(crossing) == 1 and "crossings: 1" in lines
    detail = "no crossing found"
    if crossing:
        lam = float(re.search(r"lambda\* = (\S+),", crossing[0]).group(1))
        form = [float(x) for x in re.search(r"form eigenvalues \[([^\]]*)\]", crossing[0]).group(1).split(",")]
        signs = [int(np.sign(x)) for x in form]
        newton = next(l for l in lines if l.startswith("newton near crossing 1"))
        ok = (ok and abs(lam - 1.0) < 1e-9 and sorted(signs) == [-1, 1] and sum(signs) == 0
              and newton.startswith("newton near crossing 1: 0 nontrivial solutions"))
        detail = (f"sfl = 0, crossing at lambda* = {lam:.10f} with signatures {sorted(signs)}, "
                  f"{newton.split(': ', 1)[1]}")
    acceptance(3, ok, detail)
    assert ok, report + err


def test_criterion_4_bifurcation_example(even_run, acceptance):
    code, report, err, _ = even_run
    lines = report.splitlines()
    morse = re.search(r"fixed_block_morse: (\d+) -> (\d+)", report)
    equi = re.search(r"sfl_G = \((-?\d+), (-?\d+)\)", report)
    branch = [(float(a), float(b)) for a, b in
              re.findall(r"branch: lambda = (\S+), norm = (\S+)", report)]
    above = sorted(x for x in branch if x[0] > 1.0)
    below = [x for x in branch if x[0] <= 1.0]
    norms = [n for _, n in above]
    # norm decreases monotonically towards 0 as lambda -> 1+
    monotone = len(norms) >= 3 and all(a < b for a, b in zip(norms, norms[1:]))
    jump = abs(int(morse.group(2)) - int(morse.group(1))) if morse else -1
    ok = (code == 0 and jump == 1 and equi is not None and equi.groups() != ("0", "0")
          and "verdict: bifurcation_certified" in lines and monotone and not below)
    acceptance(4, ok, f"fixed-block Morse jump {jump}, sfl_G = ({', '.join(equi.groups())}), "
                      f"branch norms {[round(n, 5) for n in norms]} at lambda "
                      f"{[round(l, 4) for l, _ in above]}")
    assert ok, report + err


def test_criterion_5_property_suite(acceptance):
    start = time.perf_counter()
    summary = run_property_suite(count=500, seed=0, max_dim=50)
    seconds = time.perf_counter() - start
    ok = summary.paths >= 500 and summary.ok
    acceptance(5, ok, f"{summary.line()}, {seconds:.0f} s")
    assert ok, "\n".join(summary.failures)


def test_criterion_6_discretization_stability(ham_run, afi_run, even_run, acceptance):
    _, ham, _, _ = ham_run
    matrix = [re.findall(r"sfl \(matrix, T=(\d+), m=(\d+)\) = (-?\d+)", block_lines(ham, b)[0])
              for b in ("fixed", "anti")]
    refined = {b: int(v[1][2]) for b, v in zip(("fixed", "anti"), matrix) if len(v) == 2
               and v[1][:2] == ("16", "800")}
    # shooting at the doubled truncation as well
    p = build_homoclinic_example(truncation=16.0, grid=800)
    shooting = {}
    for label, block in zip(("fixed", "anti"), p.blocks()):
        crossings, total, _ = _block_shooting(block, 32, 1)
        shooting[label] = total
    pde_ok = True
    notes = []
    for name, (_, rep, _, _) in (("afi", afi_run), ("even", even_run)):
        line = next((l for l in rep.splitlines() if l.startswith("refined:")), "")
        base = re.search(r"^sfl = (-?\d+)", rep, re.M).group(1)
        pde_ok = pde_ok and "modes 128" in line and f"sfl = {base}" in line and line.endswith("(agrees)")
        notes.append(f"{name}: {line[len('refined: '):]}")
    ok = refined == {"fixed": -1, "anti": 1} and shooting == {"fixed": -1, "anti": 1} and pde_ok
    acceptance(6, ok, f"ham at (16, 800): matrix {refined}, shooting {shooting}; " + "; ".join(notes))
    assert ok


def test_criterion_7_determinism(ham_run, afi_run, workdir, acceptance):
    runs = {"ham": (ham_run, ["ham", "--preset", "pejsachowicz-loop"]),
            "pde": (afi_run, ["pde", "--preset", "afi", "--modes", "64"])}
    same = {}
    for name, (first, args) in runs.items():
        second = cli(args, workdir / f"{name}8", parallel=8)
        same[name] = first[0] == second[0] == 0 and first[1] == second[1]
    for preset in ("opposite-crossings", "scalar-crossing"):
        a = cli(["path", "--preset", preset], workdir / "p1")
        b = cli(["path", "--preset", preset], workdir / "p8", parallel=8)
        same[preset] = a[1] == b[1] and (workdir / "p1" / f"path-{preset}-report.txt").read_bytes() \
            == (workdir / "p8" / f"path-{preset}-report.txt").read_bytes()
    a = cli(["selftest", "--seed", "3", "--config", str(_selftest_ini(workdir))], workdir / "s1")
    b = cli(["selftest", "--seed", "3", "--config", str(_selftest_ini(workdir))], workdir / "s8", 8)
    same["selftest"] = a[1] == b[1]
    ok = all(same.values())
    acceptance(7, ok, "byte-identical reports at parallel 1 and 8: "
                      + ", ".join(f"{k} {'yes' if v else 'no'}" for k, v in same.items()))
    assert ok


def _selftest_ini(workdir):
    f = workdir / "selftest.ini"
    f.write_text("[selftest]\ncount = 5\nmax_dim = 10\n")
    return f
