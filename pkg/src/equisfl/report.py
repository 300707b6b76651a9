"""Plain-text reports and eigenvalue-curve CSV files.

Numbers are printed with a fixed number of significant digits so that
reports are byte-identical across runs and parallelism degrees.  The only
run-dependent line is the optional timestamp.
"""

from __future__ import annotations

import csv
import io
from datetime import datetime, timezone

import numpy as np

from .linalg import eigvalsh
from .paths import OperatorPath
from .sflcore import Crossing, SpectralFlowResult, _pmap


def fnum(x: float, digits: int = 10) -> str:
    x = float(x)
    if x == 0.0:
        return "0"  # avoids "-0"
    return f"{x:.{digits}g}"


def fvec(xs, digits: int = 6) -> str:
    return "[" + ", ".join(fnum(x, digits) for x in np.ravel(xs)) + "]"


def yesno(flag: bool) -> str:
    return "yes" if flag else "no"


def header(kind: str, timestamp: bool) -> list[str]:
    lines = [f"equisfl {kind} report"]
    if timestamp:
        lines.append("timestamp: " + datetime.now(timezone.utc).isoformat(timespec="seconds"))
    return lines


def crossing_lines(crossings: list[Crossing], indent: str = "  ") -> list[str]:
    out = [f"crossings: {len(crossings)}"]
    for k, c in enumerate(crossings, 1):
        sig = "n/a (degenerate form)" if c.signature is None else f"{c.signature:+d}" if c.signature else "0"
        out.append(f"{indent}crossing {k}: lambda* = {fnum(c.lambda_star)}, kernel dim {c.dim}, "
                   f"signature {sig}, form eigenvalues {fvec(np.linalg.eigvalsh(c.form))}")
    return out


def sfl_lines(result: SpectralFlowResult) -> list[str]:
    out = [f"method: {result.method.value}", f"sfl = {result.sfl}"]
    if result.sfl_equivariant is not None:
        out.append(f"sfl_G = {result.sfl_equivariant}")
    d = result.diagnostics
    if "partition" in d:
        out.append(f"partition: {len(d['partition'])} subintervals, depth {d['depth']}, "
                   f"min gap {fnum(d['min_gap'], 4)}, {d['evaluations']} evaluations")
    return out


def eigenvalue_csv(path: OperatorPath, samples: int, parallel: int = 1) -> str:
    """Rows ``lambda,mu_1,...,mu_n`` with eigenvalues ascending."""
    lams = np.linspace(path.lam0, path.lam1, samples)
    lams[-1] = path.lam1
    rows = _pmap(lambda lam: eigvalsh(path(float(lam)), path.bandwidth), list(lams), parallel)
    n = rows[0].size
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda"] + [f"mu_{k}" for k in range(1, n + 1)])
    for lam, w in zip(lams, rows):
        writer.writerow([repr(float(lam))] + [repr(float(x)) for x in w])
    return buf.getvalue()
