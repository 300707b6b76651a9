"""Named scalar coefficient families used by presets and config documents.

Two kinds are provided:

* ``(lam, x)`` families for the elliptic coefficients ``a``, ``b``, ``c``
  on ``(0, pi)``: ``zero``, ``constant``, ``affine`` and ``polynomial``;
* ``(lam, t)`` families for Hamiltonian matrix entries, each with a known
  limit as ``t -> +-inf``: ``zero``, ``constant``, ``lambda_affine``,
  ``arctan``, ``arctan_cos``, ``arctan_sin``, ``tanh``.

There is deliberately no expression evaluator; everything is selected by
name with numeric parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError

# -- elliptic coefficients -----------------------------------------------------


@dataclass(frozen=True)
class Coefficient:
    """``f(lam, x)`` with a flag for x-independence (enables exact assembly)."""

    name: str
    params: tuple[float, ...]
    func: Callable[[float, np.ndarray], np.ndarray]
    x_independent: bool
    dfunc: Callable[[float, np.ndarray], np.ndarray] | None = None

    def __call__(self, lam: float, x):
        return self.func(lam, np.asarray(x, dtype=float))

    def dlam(self, lam: float, x):
        """``d f / d lam``; central differences when no closed form is known."""
        x = np.asarray(x, dtype=float)
        if self.dfunc is not None:
            return self.dfunc(lam, x)
        h = 1e-6 * (1.0 + abs(lam))
        return (self.func(lam + h, x) - self.func(lam - h, x)) / (2 * h)

    def value(self, lam: float) -> float:
        """Value of an x-independent coefficient."""
        if not self.x_independent:
            raise ValueError(f"coefficient {self.name} depends on x")
        return float(np.asarray(self.func(lam, np.zeros(1)))[0])


def _coef_zero() -> Coefficient:
    return Coefficient("zero", (), lambda lam, x: np.zeros_like(x), True,
                       lambda lam, x: np.zeros_like(x))


def _coef_constant(c: float) -> Coefficient:
    return Coefficient("constant", (c,), lambda lam, x: np.full_like(x, c), True,
                       lambda lam, x: np.zeros_like(x))


def _coef_affine(c0: float, c1: float) -> Coefficient:
    """``c0 + c1 * lam``."""
    return Coefficient("affine", (c0, c1), lambda lam, x: np.full_like(x, c0 + c1 * lam), True,
                       lambda lam, x: np.full_like(x, c1))


def _coef_polynomial(*coeffs: float) -> Coefficient:
    """``sum c_ij lam^i x^j``; parameters are ``p, q`` then the (p+1) x (q+1) table row-major."""
    if len(coeffs) < 2:
        raise ConfigError("polynomial needs degrees p, q followed by coefficients")
    p, q = int(coeffs[0]), int(coeffs[1])
    if p < 0 or q < 0 or (p, q) != (coeffs[0], coeffs[1]):
        raise ConfigError("polynomial degrees must be non-negative integers")
    table = np.asarray(coeffs[2:], dtype=float)
    if table.size != (p + 1) * (q + 1):
        raise ConfigError(f"polynomial of degrees ({p}, {q}) needs {(p + 1) * (q + 1)} coefficients, "
                          f"got {table.size}")
    table = table.reshape(p + 1, q + 1)

    def f(lam: float, x: np.ndarray) -> np.ndarray:
        in_x = table.T @ (lam ** np.arange(p + 1))  # coefficients of x^j
        return np.polynomial.polynomial.polyval(x, in_x)

    def df(lam: float, x: np.ndarray) -> np.ndarray:
        i = np.arange(1, p + 1)
        in_x = table[1:].T @ (i * lam ** (i - 1)) if p else np.zeros(q + 1)
        return np.polynomial.polynomial.polyval(x, in_x) * np.ones_like(x)

    return Coefficient("polynomial", tuple(coeffs), lambda lam, x: f(lam, x) * np.ones_like(x),
                       bool(np.all(table[:, 1:] == 0)), df)


COEFFICIENTS: dict[str, Callable[..., Coefficient]] = {
    "zero": _coef_zero,
    "constant": _coef_constant,
    "affine": _coef_affine,
    "polynomial": _coef_polynomial,
}


def make_coefficient(name: str, params=()) -> Coefficient:
    try:
        factory = COEFFICIENTS[name]
    except KeyError:
        raise ConfigError(f"unknown coefficient family {name!r}; "
                          f"choose from {sorted(COEFFICIENTS)}") from None
    try:
        return factory(*(float(v) for v in params))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


# -- Hamiltonian entries ----------------------------------------------------


@dataclass(frozen=True)
class TimeFamily:
    """``f(lam, t)`` vectorised in ``t``, with ``df/dlam`` and limits at ``+-inf``.

    ``lam_part(lam)`` and ``t_part(t)`` factor the family as a product,
    ``f = lam_part(lam) * t_part(t)``.
    """

    name: str
    params: tuple[float, ...]
    lam_part: Callable[[float], float]
    dlam_part: Callable[[float], float]
    t_part: Callable[[np.ndarray], np.ndarray]
    t_limits: tuple[float, float]

    def __call__(self, lam: float, t) -> np.ndarray:
        return self.lam_part(lam) * self.t_part(np.asarray(t, dtype=float))

    def dlam(self, lam: float, t) -> np.ndarray:
        return self.dlam_part(lam) * self.t_part(np.asarray(t, dtype=float))

    def limit(self, lam: float, side: int) -> float:
        """Limit as ``t -> side * inf`` (``side`` is ``-1`` or ``+1``)."""
        return self.lam_part(lam) * self.t_limits[0 if side < 0 else 1]

    def reflected(self) -> TimeFamily:
        """The family ``(lam, t) -> f(-lam, t)``."""
        lp, dp = self.lam_part, self.dlam_part
        return TimeFamily(self.name + "[-lam]", self.params, lambda lam: lp(-lam),
                          lambda lam: -dp(-lam), self.t_part, self.t_limits)


_HALF_PI = 0.5 * np.pi


def _ones(t: np.ndarray) -> np.ndarray:
    return np.ones_like(t)


def _tf_zero() -> TimeFamily:
    return TimeFamily("zero", (), lambda lam: 0.0, lambda lam: 0.0, _ones, (1.0, 1.0))


def _tf_constant(c: float) -> TimeFamily:
    return TimeFamily("constant", (c,), lambda lam: c, lambda lam: 0.0, _ones, (1.0, 1.0))


def _tf_lambda_affine(c0: float, c1: float) -> TimeFamily:
    return TimeFamily("lambda_affine", (c0, c1), lambda lam: c0 + c1 * lam,
                      lambda lam: c1, _ones, (1.0, 1.0))


def _tf_arctan(c: float) -> TimeFamily:
    return TimeFamily("arctan", (c,), lambda lam: c, lambda lam: 0.0, np.arctan,
                      (-_HALF_PI, _HALF_PI))


def _tf_arctan_cos(c: float, w: float = 1.0, phase: float = 0.0) -> TimeFamily:
    """``c * arctan(t) * cos(w lam + phase)``."""
    return TimeFamily("arctan_cos", (c, w, phase), lambda lam: c * np.cos(w * lam + phase),
                      lambda lam: -c * w * np.sin(w * lam + phase), np.arctan,
                      (-_HALF_PI, _HALF_PI))


def _tf_arctan_sin(c: float, w: float = 1.0, phase: float = 0.0) -> TimeFamily:
    """``c * arctan(t) * sin(w lam + phase)``."""
    return TimeFamily("arctan_sin", (c, w, phase), lambda lam: c * np.sin(w * lam + phase),
                      lambda lam: c * w * np.cos(w * lam + phase), np.arctan,
                      (-_HALF_PI, _HALF_PI))


def _tf_tanh(c: float) -> TimeFamily:
    return TimeFamily("tanh", (c,), lambda lam: c, lambda lam: 0.0, np.tanh, (-1.0, 1.0))


TIME_FAMILIES: dict[str, Callable[..., TimeFamily]] = {
    "zero": _tf_zero,
    "constant": _tf_constant,
    "lambda_affine": _tf_lambda_affine,
    "arctan": _tf_arctan,
    "arctan_cos": _tf_arctan_cos,
    "arctan_sin": _tf_arctan_sin,
    "tanh": _tf_tanh,
}


def make_time_family(name: str, params=()) -> TimeFamily:
    try:
        factory = TIME_FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown time family {name!r}; "
                          f"choose from {sorted(TIME_FAMILIES)}") from None
    try:
        return factory(*(float(v) for v in params))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


def parse_family_spec(text: str) -> tuple[str, tuple[float, ...]]:
    """``"arctan_cos 1 1 0"`` -> ``("arctan_cos", (1.0, 1.0, 0.0))``."""
    parts = text.split()
    if not parts:
        raise ConfigError("empty family specification")
    try:
        return parts[0], tuple(float(p) for p in parts[1:])
    except ValueError:
        raise ConfigError(f"non-numeric parameter in {text!r}") from None
