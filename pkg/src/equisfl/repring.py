"""The representation ring RO(Z2) as an abelian group.

A virtual representation ``[E] - [F]`` of Z2 is determined by two integers:
the difference of total dimensions and the difference of the dimensions of
the fixed-point subspaces.  Elements are stored as that pair, which makes
the group operations exact integer arithmetic.

The trivial group is modelled by pairs with ``d_fixed == d_total``.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "RepRingElement",
    "ZERO",
    "rep_from_spaces",
    "rep_add",
    "rep_neg",
    "forgetful",
    "trivial",
]


@dataclass(frozen=True, order=True)
class RepRingElement:
    """Virtual Z2-representation ``[E] - [F]`` in total/fixed coordinates."""

    d_total: int
    d_fixed: int

    def __post_init__(self) -> None:
        # accept numpy integers, reject floats that are not integral
        for name in ("d_total", "d_fixed"):
            value = getattr(self, name)
            if int(value) != value:
                raise TypeError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def __add__(self, other: RepRingElement) -> RepRingElement:
        if not isinstance(other, RepRingElement):
            return NotImplemented
        return RepRingElement(self.d_total + other.d_total, self.d_fixed + other.d_fixed)

    def __neg__(self) -> RepRingElement:
        return RepRingElement(-self.d_total, -self.d_fixed)

    def __sub__(self, other: RepRingElement) -> RepRingElement:
        if not isinstance(other, RepRingElement):
            return NotImplemented
        return self + (-other)

    def __bool__(self) -> bool:
        return self.d_total != 0 or self.d_fixed != 0

    @property
    def d_anti(self) -> int:
        """Dimension difference on the complement of the fixed space."""
        return self.d_total - self.d_fixed

    def __str__(self) -> str:
        return f"({self.d_total}, {self.d_fixed})"


ZERO = RepRingElement(0, 0)


def rep_from_spaces(dimE: int, dimEfixed: int, dimF: int, dimFfixed: int) -> RepRingElement:
    """Class of ``[E] - [F]`` from the dimensions of E, E^G, F and F^G."""
    for name, value in (("dimE", dimE), ("dimEfixed", dimEfixed),
                        ("dimF", dimF), ("dimFfixed", dimFfixed)):
        if value < 0:
            raise ValueError(f"{name} must be non-negative, got {value}")
    if dimEfixed > dimE:
        raise ValueError(f"fixed dimension {dimEfixed} exceeds total dimension {dimE}")
    if dimFfixed > dimF:
        raise ValueError(f"fixed dimension {dimFfixed} exceeds total dimension {dimF}")
    return RepRingElement(dimE - dimF, dimEfixed - dimFfixed)


def rep_add(a: RepRingElement, b: RepRingElement) -> RepRingElement:
    return a + b


def rep_neg(a: RepRingElement) -> RepRingElement:
    return -a


def forgetful(a: RepRingElement) -> int:
    """Forget the group action: ``[U] - [V]`` maps to ``dim U - dim V``."""
    return a.d_total


def trivial(n: int) -> RepRingElement:
    """Element of RO(trivial group), embedded with a fully fixed action."""
    return RepRingElement(n, n)
