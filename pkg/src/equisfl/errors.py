"""Exception hierarchy.

Every numerical failure raised by the package derives from
:class:`SpectralFlowError`; the CLI maps that family to exit status 2.
Configuration and file-format problems derive from :class:`ConfigError`
(exit status 1).
"""

from __future__ import annotations


class SpectralFlowError(Exception):
    """Base class for numerical failures."""


class ConfigError(ValueError):
    """Invalid user input: config documents, path files, presets."""


class PathFileError(ConfigError):
    """Malformed operator-path file."""


class AsymmetricMatrixError(SpectralFlowError, ValueError):
    """A matrix that should be symmetric is not, beyond ``sym_tol``."""


class EigensolverError(SpectralFlowError):
    """The symmetric eigensolver failed to converge."""


class BoundaryEigenvalueError(SpectralFlowError):
    """An eigenvalue sits within the guard distance of a counting bound."""


class NearKernelAmbiguityError(SpectralFlowError):
    """Strict Morse counting met an eigenvalue inside ``[-zero_tol, zero_tol)``."""


class AmbiguousKernelError(SpectralFlowError):
    """No spectral gap separates the numerical kernel from the rest."""


class DegenerateFormError(SpectralFlowError):
    """A quadratic form has an eigenvalue inside ``[-zero_tol, zero_tol]``."""


class NotAnInvolutionError(SpectralFlowError, ValueError):
    """A matrix offered as a Z2 action is not an orthogonal involution."""


class NotEquivariantError(SpectralFlowError):
    """An operator fails to commute with the involution."""


class SubspaceNotInvariantError(SpectralFlowError):
    """A subspace is not invariant under the path at some sampled parameter."""

    def __init__(self, message: str, lam: float | None = None, residual: float | None = None):
        super().__init__(message)
        self.lam = lam
        self.residual = residual


class RefinementLimitError(SpectralFlowError):
    """Partition refinement hit ``max_depth`` without an admissible level."""


class UnresolvedCrossingClusterError(SpectralFlowError):
    """Distinct crossings could not be separated numerically."""


class NonRegularCrossingError(SpectralFlowError):
    """A crossing form is degenerate; the crossing-form method does not apply."""


class HyperbolicityError(SpectralFlowError):
    """An asymptotic matrix ``J A(+-inf)`` has spectrum near the imaginary axis."""


class IntegrationError(SpectralFlowError):
    """The ODE integrator failed."""


class QuadratureError(SpectralFlowError):
    """Adaptive quadrature missed its tolerance."""


class PathwayDisagreementError(SpectralFlowError):
    """Independent computations of the same integer invariant disagree."""
