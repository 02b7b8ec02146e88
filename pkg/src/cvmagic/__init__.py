"""Magic of continuous-variable states seen through GKP subsystem decompositions.

A CV state is mapped to a logical qubit by one of three decompositions
(stabilizer, modular, Gaussian-modular); the qubit's robustness of magic,
T/H fidelities and distillability are then reported.
"""

from .errors import (
    CoverageError,
    CVMagicError,
    DegenerateStateError,
    InvalidParameterError,
    NumericsError,
    OptimizationError,
    WrongVariantError,
)
from .magic import (
    F_STAR,
    R_H_STAR,
    R_STAR,
    BlochVector,
    MagicReport,
    bloch,
    classify,
    fidelity_H_max,
    fidelity_T_max,
    rom_single,
)
from .numerics import DEFAULT_CONFIG, NumericsConfig
from .ssdmaps import (
    LogicalResidual,
    QubitDensityMatrix,
    SsdKind,
    gaussian_modular_ssd,
    gkp_offdiag_localized_approx,
    modular_nongaussian_part,
    modular_ssd,
    ssd,
    stabilizer_ssd,
    stabilizer_ssd_oracle,
)
from .states import (
    Cat,
    CubicPhase,
    GaussianPure,
    GkpEnvelope,
    Mixture,
    is_position_symmetric,
    jacobi_theta,
    norm_sq,
    psi_eval,
    rho_eval,
    state_from_json,
    state_to_json,
)
from .sweep import OptimizeResult, SweepRow, SweepSpec, hierarchy_probe, optimize_rom, run_sweep, write_csv
from .wigner import PhaseSpaceGrid, wigner_eval, wigner_grid, wln

__version__ = "0.1.0"
