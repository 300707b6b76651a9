"""Classical and Z2-equivariant spectral flow of symmetric operator paths.

The engine lives in :mod:`equisfl.sflcore`; the two model problems are in
:mod:`equisfl.pde_model` (elliptic Dirichlet system) and
:mod:`equisfl.ham_model` (homoclinic Hamiltonian system).
"""

__version__ = "0.1.0"

from .equivariance import Involution, isotypic_split, restrict_path
from .paths import OperatorPath, affine_path, concatenate, constant_path
from .repring import RepRingElement, forgetful, rep_add, rep_from_spaces, rep_neg
from .sflcore import (
    Crossing,
    Method,
    SpectralFlowResult,
    Verdict,
    bifurcation_verdict,
    equivariant_spectral_flow,
    find_crossings,
    sfl_via_morse,
    spectral_flow,
    spectral_flow_crossings,
    spectral_flow_partition,
)

__all__ = [
    "Crossing",
    "Involution",
    "Method",
    "OperatorPath",
    "RepRingElement",
    "SpectralFlowResult",
    "Verdict",
    "affine_path",
    "bifurcation_verdict",
    "concatenate",
    "constant_path",
    "equivariant_spectral_flow",
    "find_crossings",
    "forgetful",
    "isotypic_split",
    "rep_add",
    "rep_from_spaces",
    "rep_neg",
    "restrict_path",
    "sfl_via_morse",
    "spectral_flow",
    "spectral_flow_crossings",
    "spectral_flow_partition",
]
