"""Plain-text operator-path files.

Layout::

    n m
    lambda0 lambda1
    involution            (optional, followed by n rows of n entries)
    <m blocks of n rows with n whitespace-separated entries>

The ``m`` samples sit at uniformly spaced parameters.  Between samples the
path is interpolated linearly, so its derivative is piecewise constant.
Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .equivariance import Involution
from .errors import NotAnInvolutionError, PathFileError
from .linalg import SYM_TOL, asymmetry
from .paths import OperatorPath


class PiecewiseLinearSampler:
    """Linear interpolation of matrix samples at uniform parameters."""

    def __init__(self, samples: np.ndarray, lambda_range: tuple[float, float]):
        self.samples = np.asarray(samples, dtype=float)
        self.lam0, self.lam1 = lambda_range
        self.m = self.samples.shape[0]
        self.h = (self.lam1 - self.lam0) / (self.m - 1)

    def _locate(self, lam: float) -> tuple[int, float]:
        s = (lam - self.lam0) / self.h
        i = int(np.clip(np.floor(s), 0, self.m - 2))
        return i, s - i

    def __call__(self, lam: float) -> np.ndarray:
        i, f = self._locate(lam)
        if f == 0.0:
            return self.samples[i].copy()
        if f == 1.0:
            return self.samples[i + 1].copy()
        return (1.0 - f) * self.samples[i] + f * self.samples[i + 1]

    def slope(self, lam: float) -> np.ndarray:
        """Exact derivative; right-sided at interior knots."""
        i, _ = self._locate(lam)
        return (self.samples[i + 1] - self.samples[i]) / self.h


def _rows(text: str) -> list[list[str]]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line.split())
    return out


def _numbers(row: list[str], count: int, what: str, lineno: int) -> list[float]:
    if len(row) != count:
        raise PathFileError(f"{what} (row {lineno}): expected {count} entries, got {len(row)}")
    try:
        return [float(x) for x in row]
    except ValueError:
        raise PathFileError(f"{what} (row {lineno}): non-numeric entry in {' '.join(row)!r}") from None


def parse_path_file(data: bytes | str, name: str = "") -> OperatorPath:
    """Parse the text format above into an :class:`OperatorPath`.

    Raises :class:`~equisfl.errors.PathFileError` on malformed headers,
    dimension mismatches, asymmetric samples or an invalid involution.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    rows = _rows(text)
    if len(rows) < 2:
        raise PathFileError("path file needs a 'n m' line and a 'lambda0 lambda1' line")
    try:
        n, m = (int(x) for x in rows[0])
        if len(rows[0]) != 2:
            raise ValueError
    except ValueError:
        raise PathFileError(f"bad header {' '.join(rows[0])!r}; expected 'n m'") from None
    if n < 1 or m < 2:
        raise PathFileError(f"need n >= 1 and m >= 2, got n={n}, m={m}")
    lam0, lam1 = _numbers(rows[1], 2, "parameter range", 2)
    if not lam0 < lam1:
        raise PathFileError(f"degenerate parameter range [{lam0}, {lam1}]")
    pos = 2
    involution = None
    if pos < len(rows) and rows[pos] == ["involution"]:
        pos += 1
        if pos + n > len(rows):
            raise PathFileError("truncated involution block")
        sigma = np.array([_numbers(rows[pos + i], n, "involution", pos + i + 1) for i in range(n)])
        pos += n
        try:
            involution = Involution(sigma)
        except NotAnInvolutionError as exc:
            raise PathFileError(f"invalid involution: {exc}") from None
    body = rows[pos:]
    if len(body) != n * m:
        raise PathFileError(f"expected {m} blocks of {n} rows ({n * m} rows), found {len(body)}")
    samples = np.empty((m, n, n))
    for k in range(m):
        for i in range(n):
            samples[k, i] = _numbers(body[k * n + i], n, f"sample {k}", pos + k * n + i + 1)
        res = asymmetry(samples[k])
        if res > SYM_TOL:
            raise PathFileError(f"sample {k} is not symmetric (asymmetry {res:.3e})")
        samples[k] = 0.5 * (samples[k] + samples[k].T)
    sampler = PiecewiseLinearSampler(samples, (lam0, lam1))
    return OperatorPath(sampler, (lam0, lam1), derivative=sampler.slope,
                        involution=involution, name=name)


def read_path_file(path: str | Path) -> OperatorPath:
    p = Path(path)
    return parse_path_file(p.read_bytes(), name=p.stem)


def _fmt(x: float) -> str:
    # shortest repr that round-trips
    return repr(float(x))


def serialize_path(path: OperatorPath, m: int) -> str:
    """Sample ``path`` at ``m`` uniform parameters and write the text format."""
    if m < 2:
        raise ValueError("need at least two samples")
    lams = np.linspace(path.lam0, path.lam1, m)
    lams[-1] = path.lam1
    n = path.dim
    lines = [f"{n} {m}", f"{_fmt(path.lam0)} {_fmt(path.lam1)}"]
    if path.involution is not None:
        lines.append("involution")
        lines += [" ".join(_fmt(x) for x in row) for row in path.involution.matrix]
    for lam in lams:
        M = path(float(lam))
        lines += [" ".join(_fmt(x) for x in row) for row in M]
    return "\n".join(lines) + "\n"


def write_path_file(path: OperatorPath, target: str | Path, m: int) -> None:
    Path(target).write_text(serialize_path(path, m), encoding="utf-8")
