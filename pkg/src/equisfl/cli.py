"""Command-line front end.

Usage::

    equisfl path FILE [options]
    equisfl pde  --preset even-bifurcation [options]
    equisfl ham  --preset pejsachowicz-loop [options]
    equisfl selftest [--seed k]

Exit status: 0 success, 1 invalid configuration or input file,
2 numerical failure (including selftest violations), 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .equivariance import Involution
from .errors import ConfigError, SpectralFlowError
from .ham_model import (
    EntryMatrix,
    HamiltonianProblem,
    assemble_truncated_operator_path,
    build_homoclinic_example,
    build_reduced_family,
    hamiltonian_report,
)
from .pathfile import read_path_file
from .paths import OperatorPath, affine_path, constant_path
from .pde_model import (
    NewtonStats,
    PdeProblem,
    assemble_pde_hessian,
    branch_profile,
    make_remainder,
    newton_branch_search,
    pde_bifurcation_report,
)
from .properties import run_property_suite
from .report import crossing_lines, eigenvalue_csv, fnum, fvec, header, sfl_lines, yesno
from .sflcore import (
    bifurcation_verdict,
    endpoint_invertibility,
    equivariant_spectral_flow,
    find_crossings,
    spectral_flow,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


# -- path ---------------------------------------------------------------------------


def _path_preset(name: str) -> OperatorPath:
    if name == "identity":
        return constant_path(np.eye(2))
    if name == "scalar-crossing":
        return affine_path([[-0.5]], [[1.0]])
    # diag(lam - 1/2, 1/2 - lam) with sigma = diag(1, -1)
    return affine_path(np.diag([-0.5, 0.5]), np.diag([1.0, -1.0]),
                       involution=Involution(np.array([1.0, -1.0])))


def run_path(cfg: RunConfig) -> tuple[list[str], dict[str, str], int]:
    opts = cfg.path
    if cfg.preset:
        path, name = _path_preset(cfg.preset), cfg.preset
    else:
        path = read_path_file(opts["file"])
        name = Path(opts["file"]).stem
    tol = cfg.tolerances.get("zero_tol")
    if path.involution is not None:
        result = equivariant_spectral_flow(path, opts["method"], parallel=cfg.parallel, zero_tol=tol)
    else:
        result = spectral_flow(path, opts["method"], parallel=cfg.parallel, zero_tol=tol)
    invertible = endpoint_invertibility(path, tol)
    verdict = bifurcation_verdict(result, invertible)
    lines = header("path", cfg.timestamp) + [
        f"name: {name}",
        f"dimension: {path.dim}",
        f"lambda_range: [{fnum(path.lam0)}, {fnum(path.lam1)}]",
        f"involution: {yesno(path.involution is not None)}",
    ]
    lines += sfl_lines(result)
    try:
        crossings = find_crossings(path, opts["crossing_grid"],
                                   lambda_tol=cfg.tolerances.get("lambda_tol"),
                                   kernel_tol=cfg.tolerances.get("kernel_tol"),
                                   parallel=cfg.parallel)
        lines += crossing_lines(crossings)
    except SpectralFlowError as exc:
        lines.append(f"crossings: not resolved ({type(exc).__name__}: {exc})")
    lines += [f"endpoint_invertible: {yesno(invertible[0])} {yesno(invertible[1])}",
              f"verdict: {verdict.value}"]
    lines += [f"warning: {w}" for w in result.warnings]
    csv = eigenvalue_csv(path, opts["csv_samples"], cfg.parallel)
    return lines, {f"{name}-eigenvalues.csv": csv}, EXIT_OK


# -- pde ----------------------------------------------------------------------------


def _pde_problem(opts: dict) -> PdeProblem:
    remainder = make_remainder(*opts["nonlinearity"]) if opts["nonlinearity"] else None
    try:
        return PdeProblem(opts["a"], opts["b"], opts["c"], remainder, opts["modes"],
                          opts["lambda_range"], opts["even_in_v"], opts["name"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_pde(cfg: RunConfig) -> tuple[list[str], dict[str, str], int]:
    opts = cfg.pde
    p = _pde_problem(opts)
    rep = pde_bifurcation_report(p, check_convergence=opts["check_convergence"],
                                 crossing_grid=opts["crossing_grid"], parallel=cfg.parallel)
    lines = header("pde", cfg.timestamp) + [
        f"name: {p.name}",
        f"modes: {p.modes}",
        f"lambda_range: [{fnum(p.lambda_range[0])}, {fnum(p.lambda_range[1])}]",
        f"even_in_v: {yesno(p.even_in_v)}",
        f"sfl = {rep.sfl}",
    ]
    if rep.sfl_equivariant is not None:
        lines.append(f"sfl_G = {rep.sfl_equivariant}")
    if rep.fixed_morse is not None:
        lines.append(f"fixed_block_morse: {rep.fixed_morse[0]} -> {rep.fixed_morse[1]}")
    lines += crossing_lines(rep.crossings)
    ok = rep.endpoint_invertible
    lines += [f"endpoint_invertible: {yesno(ok[0])} {yesno(ok[1])}",
              f"verdict: {rep.verdict.value}",
              f"mechanism: {rep.mechanism}"]
    if rep.refined:
        r = rep.refined
        text = f"refined: modes {r['modes']}, sfl = {r['sfl']}"
        if r["sfl_equivariant"] is not None:
            text += f", sfl_G = {r['sfl_equivariant']}"
        if r["fixed_morse"] is not None:
            text += f", fixed_block_morse: {r['fixed_morse'][0]} -> {r['fixed_morse'][1]}"
        lines.append(text + " (agrees)")
    if p.remainder is not None:
        for k, c in enumerate(rep.crossings, 1):
            stats = NewtonStats()
            points = newton_branch_search(p, c.lambda_star, opts["newton_radius"], opts["newton_grid"],
                                          parallel=cfg.parallel, stats=stats)
            profile = branch_profile(points)
            lines.append(f"newton near crossing {k}: {len(points)} nontrivial solutions at "
                         f"{len(profile)} parameter values ({stats.attempts} attempts, "
                         f"{stats.converged_nontrivial} converged nontrivial, "
                         f"{stats.converged_trivial} trivial, {stats.failed} not converged)")
            for lam, norm in profile:
                lines.append(f"  branch: lambda = {fnum(lam)}, norm = {fnum(norm)}")
    lines += [f"warning: {w}" for w in rep.warnings]
    csv = eigenvalue_csv(assemble_pde_hessian(p), opts["csv_samples"], cfg.parallel)
    return lines, {f"{p.name}-eigenvalues.csv": csv}, EXIT_OK


# -- ham ----------------------------------------------------------------------------


def _ham_problem(opts: dict) -> HamiltonianProblem:
    T, m, rng = opts["truncation"], opts["grid"], opts["lambda_range"]
    preset = opts["preset"]
    if "entries" in opts:
        inv = None if opts.get("involution") is None else np.array(opts["involution"])
        try:
            return HamiltonianProblem(EntryMatrix(opts["dim"], opts["entries"]), rng, T, m, inv,
                                      opts["name"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if preset == "reduced":
        return build_reduced_family(rng, T, m)
    p = build_homoclinic_example(rng, T, m)
    p.name = preset
    return p


def run_ham(cfg: RunConfig) -> tuple[list[str], dict[str, str], int]:
    opts = cfg.ham
    p = _ham_problem(opts)
    rep = hamiltonian_report(p, shooting_grid=opts["shooting_grid"],
                             check_convergence=opts["check_convergence"], parallel=cfg.parallel)
    lines = header("ham", cfg.timestamp) + [
        f"name: {rep.name}",
        f"lambda_range: [{fnum(rep.lambda_range[0])}, {fnum(rep.lambda_range[1])}]",
        f"truncation: T = {fnum(p.truncation)}, grid m = {p.grid}",
        f"hyperbolicity_margin: {fnum(rep.hyperbolicity_margin, 6)}",
        f"sfl = {rep.sfl}",
    ]
    if rep.sfl_equivariant is not None:
        lines.append(f"sfl_G = {rep.sfl_equivariant}")
    for b in rep.blocks:
        lines.append(f"block {b.label}: sfl (shooting) = {b.sfl_shooting}, "
                     f"sfl (matrix, T={fnum(b.matrix.truncation)}, m={b.matrix.grid}) = "
                     f"{b.matrix.sfl_bulk}"
                     + ("" if b.matrix_refined is None else
                        f", sfl (matrix, T={fnum(b.matrix_refined.truncation)}, "
                        f"m={b.matrix_refined.grid}) = {b.matrix_refined.sfl_bulk}"))
        lines.append(f"  raw loop flow {b.matrix.sfl_raw}, bulk rounding defect "
                     f"{fnum(b.matrix.rounding_defect, 3)}")
        lines.append(f"  crossings: {len(b.crossings)}")
        for k, c in enumerate(b.crossings, 1):
            sig = "n/a" if c.signature is None else f"{c.signature:+d}" if c.signature else "0"
            form = "n/a" if c.form is None else fvec(np.linalg.eigvalsh(c.form), 8)
            lines.append(f"    crossing {k}: lambda* = {fnum(c.lambda_star, 8)}, kernel dim {c.dim}, "
                         f"form {form}, signature {sig}")
    if rep.full_raw_sfl is not None:
        lines.append(f"unsplit truncated path: sfl = {rep.full_raw_sfl} (matches block sum)")
    ok = rep.endpoint_invertible
    lines += ["pathways: agree",
              f"endpoint_invertible: {yesno(ok[0])} {yesno(ok[1])}",
              f"verdict: {rep.verdict.value}"]
    lines += [f"warning: {w}" for w in rep.warnings]
    csv = eigenvalue_csv(assemble_truncated_operator_path(p), opts["csv_samples"], cfg.parallel)
    return lines, {f"{rep.name}-eigenvalues.csv": csv}, EXIT_OK


# -- selftest -----------------------------------------------------------------------


def run_selftest(cfg: RunConfig) -> tuple[list[str], dict[str, str], int]:
    opts = cfg.selftest
    summary = run_property_suite(opts["count"], cfg.seed, opts["max_dim"])
    lines = header("selftest", cfg.timestamp) + [f"seed: {cfg.seed}", f"max_dim: {opts['max_dim']}"]
    lines += [f"violations[{k}]: {v}" for k, v in sorted(summary.violations.items())]
    lines += [f"failure: {f}" for f in summary.failures]
    lines.append(summary.line())
    return lines, {}, EXIT_OK if summary.ok else EXIT_NUMERIC


RUNNERS = {"path": run_path, "pde": run_pde, "ham": run_ham, "selftest": run_selftest}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="equisfl", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(RUNNERS))
    ap.add_argument("file", nargs="?", help="operator-path file (path command)")
    ap.add_argument("--config", help="INI configuration document")
    ap.add_argument("--preset", help="built-in problem")
    ap.add_argument("--out", help="output directory (default: results)")
    ap.add_argument("--modes", type=int, help="sine modes per component (pde)")
    ap.add_argument("--truncation", type=float, help="half-length T of the time window (ham)")
    ap.add_argument("--grid", type=int, help="interior grid points m (ham)")
    ap.add_argument("--seed", type=int, help="random seed (selftest)")
    ap.add_argument("--parallel", type=int, help="worker threads")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line")
    return ap


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else None
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=stderr)
        return EXIT_IO
    overrides = {"preset": args.preset, "out": args.out, "modes": args.modes,
                 "truncation": args.truncation, "grid": args.grid, "seed": args.seed,
                 "parallel": args.parallel, "file": args.file,
                 "timestamp": False if args.no_timestamp else None}
    try:
        cfg = load_config(text, command=args.command, overrides=overrides)
        lines, artifacts, status = RUNNERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except SpectralFlowError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_IO
    report = "\n".join(lines) + "\n"
    stdout.write(report)
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        stem = cfg.preset or (Path(cfg.path["file"]).stem if cfg.command == "path" else cfg.command)
        (cfg.out / f"{cfg.command}-{stem}-report.txt").write_text(report, encoding="utf-8")
        for fname, content in artifacts.items():
            (cfg.out / fname).write_text(content, encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=stderr)
        return EXIT_IO
    return status


def main() -> None:
    sys.exit(run())
