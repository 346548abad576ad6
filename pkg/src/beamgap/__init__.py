"""Floquet-Bloch spectra and high-contrast homogenization of periodic Timoshenko beam lattices."""

from .bloch import BandStructure, QuasiMomentum, assemble_scaled, band_structure, dispersion_at
from .dispersion import LimitMode, limit_modes, validate_limit
from .errors import BeamgapError
from .fem import AssembledOperators, BeamMesh, Constraints, DofField, assemble, element_matrices
from .homogenization import (
    HomogenizedTensor,
    appendix_tensor_closed_form,
    homogenized_tensor,
    solve_cell_problem,
)
from .lattice import (
    Beam,
    Component,
    MaterialParams,
    ScalingParams,
    UnitCellGraph,
    build_square_example,
    load_config,
    save_config,
    soft_subgraph,
    stiff_subgraph,
)
from .resonance import (
    BetaMatrix,
    GapClass,
    beta1_closed,
    beta2_closed,
    beta_matrix,
    scan_gaps,
    solve_soft,
    transverse_mode_closed,
)

__all__ = [
    "appendix_tensor_closed_form",
    "assemble",
    "assemble_scaled",
    "AssembledOperators",
    "band_structure",
    "BandStructure",
    "Beam",
    "BeamgapError",
    "BeamMesh",
    "beta1_closed",
    "beta2_closed",
    "beta_matrix",
    "BetaMatrix",
    "build_square_example",
    "Component",
    "Constraints",
    "dispersion_at",
    "DofField",
    "element_matrices",
    "GapClass",
    "homogenized_tensor",
    "HomogenizedTensor",
    "limit_modes",
    "LimitMode",
    "load_config",
    "MaterialParams",
    "QuasiMomentum",
    "save_config",
    "ScalingParams",
    "scan_gaps",
    "soft_subgraph",
    "solve_cell_problem",
    "solve_soft",
    "stiff_subgraph",
    "transverse_mode_closed",
    "UnitCellGraph",
    "validate_limit",
]

__version__ = "0.1.0"
