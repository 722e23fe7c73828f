"""hhi_forge: a desk-scale laboratory for quasi-free states of lattice
Klein-Gordon fields on stationary backgrounds.

Vacuum, thermal (KMS), doubled-thermal and Hartle-Hawking-Israel covariances
are constructed by two independent routes — spectral functional calculus of
the first-order generator, and Calderón projectors of the Wick-rotated
elliptic operator — and checked against each other and against the canonical
(anti-)commutation axioms.
"""

import os as _os

# Cap the BLAS pools before numpy first loads.  Honored only when the
# variable is set; library users who configured their own threading keep it.
_threads = _os.environ.get("HHI_FORGE_THREADS")
if _threads is not None and _threads.isdigit() and int(_threads) >= 1:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)

from .calderon import (
    CalderonPair,
    GreenKernel,
    calderon_thermal,
    calderon_vacuum,
    green_eval,
    green_jump_defect,
    spectral_pair,
    to_lapse,
    to_tilde,
)
from .errors import (
    BasisMismatch,
    ChargeSingular,
    ConfigError,
    DegenerateGram,
    FrameMismatch,
    FunctionSingularAtEigenvalue,
    GridMisaligned,
    HHIForgeError,
    HypothesisViolation,
    JumpDefect,
    KernelViolation,
    NotSectorial,
    NotSelfAdjoint,
    OutOfWindow,
    Overflow,
    ParityViolation,
    PencilSingular,
    ReflectionInconsistent,
    SolveFailed,
    WrongTemperature,
)
from .euclid import (
    ComplexMetric2D,
    CylinderProblem,
    DiskProblem,
    DivergenceReport,
    WedgeFamilyFit,
    assemble_cylinder,
    calderon_disk,
    calderon_elliptic,
    cylinder_mode_defect,
    cylinder_mode_operator,
    divergence_identity_check,
    doubled_reference,
    elliptic_defect,
    extend_to_disk,
    fit_wedge_family,
    gluing_error,
    harmonic_snapshot,
    hhi_covariances,
    wick_rotate,
)
from .model import (
    CauchyData,
    FirstOrderSystem,
    HypothesisReport,
    LatticeSlice,
    assemble_spatial,
    lapse_reduce,
    quadratic_pencil,
    resolvent,
    validate_hypotheses,
    wedge_slice,
)
from .spectral import GramSpace, SpectralSystem, apply_function, gram_eigendecompose
from .states import (
    AWOracle,
    CovariancePair,
    PurityReport,
    StateReport,
    WedgeReflection,
    araki_woods_oracle,
    araki_woods_pairing,
    aw_covariance_matrices,
    check_purity,
    double_kms_covariances,
    kms_covariances,
    kms_detailed_balance,
    validate_state,
    vacuum_covariances,
    wedge_double,
)

__all__ = [
    "AWOracle",
    "BasisMismatch",
    "CalderonPair",
    "CauchyData",
    "ChargeSingular",
    "ComplexMetric2D",
    "ConfigError",
    "CovariancePair",
    "CylinderProblem",
    "DegenerateGram",
    "DiskProblem",
    "DivergenceReport",
    "FirstOrderSystem",
    "FrameMismatch",
    "FunctionSingularAtEigenvalue",
    "GramSpace",
    "GreenKernel",
    "GridMisaligned",
    "HHIForgeError",
    "HypothesisReport",
    "HypothesisViolation",
    "JumpDefect",
    "KernelViolation",
    "LatticeSlice",
    "NotSectorial",
    "NotSelfAdjoint",
    "OutOfWindow",
    "Overflow",
    "ParityViolation",
    "PencilSingular",
    "PurityReport",
    "ReflectionInconsistent",
    "SolveFailed",
    "SpectralSystem",
    "StateReport",
    "WedgeFamilyFit",
    "WedgeReflection",
    "WrongTemperature",
    "apply_function",
    "araki_woods_oracle",
    "araki_woods_pairing",
    "assemble_cylinder",
    "assemble_spatial",
    "aw_covariance_matrices",
    "calderon_disk",
    "calderon_elliptic",
    "calderon_thermal",
    "calderon_vacuum",
    "check_purity",
    "cylinder_mode_defect",
    "cylinder_mode_operator",
    "divergence_identity_check",
    "double_kms_covariances",
    "doubled_reference",
    "elliptic_defect",
    "extend_to_disk",
    "fit_wedge_family",
    "gluing_error",
    "gram_eigendecompose",
    "green_eval",
    "green_jump_defect",
    "harmonic_snapshot",
    "hhi_covariances",
    "kms_covariances",
    "kms_detailed_balance",
    "lapse_reduce",
    "quadratic_pencil",
    "resolvent",
    "spectral_pair",
    "to_lapse",
    "to_tilde",
    "vacuum_covariances",
    "validate_hypotheses",
    "validate_state",
    "wedge_double",
    "wedge_slice",
    "wick_rotate",
]

__version__ = "0.1.0"
