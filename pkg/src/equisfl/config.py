"""Run configuration: INI documents, presets and command-line overrides.

A document has one section per command plus ``[run]`` and ``[tolerances]``::

    [run]
    command = pde
    preset = even-bifurcation
    parallel = 1

    [pde]
    modes = 64
    a = affine 0 1
    b = affine 0 -1
    nonlinearity = even_quartic -1 1
    even_in_v = yes

Coefficients and Hamiltonian entries are chosen by family name followed by
numeric parameters; there is no expression evaluator.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .families import make_coefficient, make_time_family, parse_family_spec

COMMANDS = ("path", "pde", "ham", "selftest")

PDE_PRESETS = {
    "afi": {"a": "affine 0 1", "b": "affine 0 -1", "c": "zero", "nonlinearity": "afi",
            "even_in_v": "no", "lambda0": "0", "lambda1": "2"},
    "even-bifurcation": {"a": "affine 0 1", "b": "affine 0 -1", "c": "zero",
                         "nonlinearity": "even_quartic -1 1", "even_in_v": "yes",
                         "lambda0": "0", "lambda1": "2"},
}
HAM_PRESETS = ("pejsachowicz-loop", "homoclinic-loop", "reduced")
PATH_PRESETS = ("identity", "scalar-crossing", "opposite-crossings")
TOLERANCE_KEYS = ("zero_tol", "kernel_tol", "lambda_tol")


@dataclass
class RunConfig:
    """Validated settings for one CLI run."""

    command: str
    preset: str | None = None
    out: Path = Path("results")
    parallel: int = 1
    seed: int = 0
    timestamp: bool = True
    path: dict = field(default_factory=dict)
    pde: dict = field(default_factory=dict)
    ham: dict = field(default_factory=dict)
    selftest: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


def _get_int(section: configparser.SectionProxy | dict, key: str, default: int, minimum: int) -> int:
    raw = section.get(key, None)
    if raw is None:
        return default
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    return value


def _get_float(section, key: str, default: float) -> float:
    raw = section.get(key, None)
    if raw is None:
        return default
    text = str(raw).strip().lower()
    # allow "pi" and "-pi" for the Hamiltonian parameter range
    if text in ("pi", "+pi", "-pi"):
        return -math.pi if text.startswith("-") else math.pi
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {raw!r}")
    return value


def _get_bool(section, key: str, default: bool) -> bool:
    raw = section.get(key, None)
    if raw is None:
        return default
    text = str(raw).strip().lower()
    if text in ("1", "yes", "true", "on"):
        return True
    if text in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"{key} must be yes/no, got {raw!r}")


def _range(section, default: tuple[float, float]) -> tuple[float, float]:
    lam0 = _get_float(section, "lambda0", default[0])
    lam1 = _get_float(section, "lambda1", default[1])
    if not lam0 < lam1:
        raise ConfigError(f"lambda range [{lam0}, {lam1}] is degenerate")
    return lam0, lam1


def _parse_pde(section: dict, preset: str | None) -> dict:
    base = dict(PDE_PRESETS.get(preset, {})) if preset else {}
    if preset and preset not in PDE_PRESETS:
        raise ConfigError(f"unknown pde preset {preset!r}; choose from {sorted(PDE_PRESETS)}")
    base.update(section)
    for key in ("a", "b"):
        if key not in base:
            raise ConfigError(f"[pde] needs coefficient {key!r} (or a preset)")
    out = {
        "modes": _get_int(base, "modes", 64, 1),
        "lambda_range": _range(base, (0.0, 2.0)),
        "even_in_v": _get_bool(base, "even_in_v", False),
        "newton_radius": _get_float(base, "newton_radius", 0.25),
        "newton_grid": _get_int(base, "newton_grid", 10, 2),
        "crossing_grid": _get_int(base, "crossing_grid", 64, 2),
        "check_convergence": _get_bool(base, "check_convergence", True),
        "csv_samples": _get_int(base, "csv_samples", 41, 2),
        "name": preset or base.get("name", "pde"),
    }
    if out["newton_radius"] <= 0:
        raise ConfigError("newton_radius must be positive")
    for key in ("a", "b", "c"):
        name, params = parse_family_spec(base.get(key, "zero"))
        out[key] = make_coefficient(name, params)
    nl = base.get("nonlinearity", "").strip()
    out["nonlinearity"] = parse_family_spec(nl) if nl else None
    return out


def _parse_ham(section: dict, preset: str | None) -> dict:
    if preset and preset not in HAM_PRESETS:
        raise ConfigError(f"unknown ham preset {preset!r}; choose from {list(HAM_PRESETS)}")
    out = {
        "preset": preset,
        "truncation": _get_float(section, "truncation", 8.0),
        "grid": _get_int(section, "grid", 400, 2),
        "lambda_range": _range(section, (-math.pi, math.pi)),
        "shooting_grid": _get_int(section, "shooting_grid", 32, 2),
        "check_convergence": _get_bool(section, "check_convergence", True),
        "csv_samples": _get_int(section, "csv_samples", 33, 2),
        "name": section.get("name", preset or "ham"),
    }
    if out["truncation"] <= 0:
        raise ConfigError("truncation must be positive")
    if out["grid"] % 2:
        raise ConfigError("grid must be even")
    entries = {}
    for key, value in section.items():
        if not key.startswith("entry."):
            continue
        try:
            _, i, j = key.split(".")
            ij = (int(i), int(j))
        except ValueError:
            raise ConfigError(f"bad entry key {key!r}; expected entry.<i>.<j>") from None
        parts = value.split("|")
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected '<family for t<0> | <family for t>=0>'")
        entries[ij] = tuple(make_time_family(*parse_family_spec(p)) for p in parts)
    if entries:
        out["dim"] = _get_int(section, "dim", 2, 2)
        out["entries"] = entries
        inv = section.get("involution", "").split()
        try:
            out["involution"] = [float(x) for x in inv] or None
        except ValueError:
            raise ConfigError(f"bad involution {section.get('involution')!r}") from None
    elif not preset:
        raise ConfigError("[ham] needs a preset or entry.<i>.<j> lines")
    return out


def _parse_tolerances(section: dict) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in TOLERANCE_KEYS:
            raise ConfigError(f"unknown tolerance {key!r}; choose from {list(TOLERANCE_KEYS)}")
        value = _get_float(section, key, 0.0)
        if value <= 0:
            raise ConfigError(f"tolerance {key} must be positive, got {raw!r}")
        out[key] = value
    return out


def load_config(text: str | None = None, *, command: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Parse an INI document (may be empty) and apply command-line overrides.

    ``overrides`` keys: ``preset``, ``out``, ``parallel``, ``seed``,
    ``timestamp``, ``modes``, ``truncation``, ``grid``, ``file``.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    try:
        parser.read_string(text or "")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    run = dict(parser["run"]) if parser.has_section("run") else {}
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    cmd = command or run.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {list(COMMANDS)}, got {cmd!r}")
    preset = ov.get("preset", run.get("preset"))
    cfg = RunConfig(
        command=cmd,
        preset=preset,
        out=Path(ov.get("out", run.get("out", "results"))),
        parallel=int(ov["parallel"]) if "parallel" in ov else _get_int(run, "parallel", 1, 1),
        seed=int(ov["seed"]) if "seed" in ov else _get_int(run, "seed", 0, 0),
        timestamp=ov.get("timestamp", _get_bool(run, "timestamp", True)),
    )
    if cfg.parallel < 1:
        raise ConfigError("parallel must be >= 1")
    section = lambda name: dict(parser[name]) if parser.has_section(name) else {}  # noqa: E731
    cfg.tolerances = _parse_tolerances(section("tolerances"))
    if cmd == "path":
        sec = section("path")
        if "file" in ov:
            sec["file"] = ov["file"]
        if preset and preset not in PATH_PRESETS:
            raise ConfigError(f"unknown path preset {preset!r}; choose from {list(PATH_PRESETS)}")
        if not preset and "file" not in sec:
            raise ConfigError("path command needs a path file or a preset")
        method = sec.get("method", "partition")
        if method not in ("partition", "crossing_form", "morse_difference"):
            raise ConfigError(f"unknown method {method!r}")
        cfg.path = {"file": sec.get("file"), "method": method,
                    "crossing_grid": _get_int(sec, "crossing_grid", 64, 2),
                    "csv_samples": _get_int(sec, "csv_samples", 41, 2)}
    elif cmd == "pde":
        sec = section("pde")
        if "modes" in ov:
            sec["modes"] = str(ov["modes"])
        cfg.pde = _parse_pde(sec, preset)
    elif cmd == "ham":
        sec = section("ham")
        for key in ("truncation", "grid"):
            if key in ov:
                sec[key] = str(ov[key])
        cfg.ham = _parse_ham(sec, preset)
    else:
        sec = section("selftest")
        cfg.selftest = {"count": _get_int(sec, "count", 500, 1),
                        "max_dim": _get_int(sec, "max_dim", 50, 1)}
    return cfg
