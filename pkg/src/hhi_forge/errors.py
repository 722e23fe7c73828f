"""Exception hierarchy for hhi_forge.

Every failure mode promised by the public operations maps to one class here,
so callers can discriminate without string matching.  All of them derive from
:class:`HHIForgeError`.
"""


class HHIForgeError(Exception):
    """Base class for all hhi_forge errors."""


# ---------------------------------------------------------------------------
# spectral


class DegenerateGram(HHIForgeError):
    """Gram matrix is not Hermitian positive definite (Cholesky failed)."""


class NotSelfAdjoint(HHIForgeError):
    """Operator is not self-adjoint with respect to the declared Gram."""


class KernelViolation(HHIForgeError):
    """Operator has eigenvalues at (numerical) zero where a gap is required."""


class FunctionSingularAtEigenvalue(HHIForgeError):
    """Scalar function evaluated to a non-finite value at an eigenvalue."""


# ---------------------------------------------------------------------------
# model


class HypothesisViolation(HHIForgeError):
    """Strict validation found a quantitative model hypothesis violated."""


class PencilSingular(HHIForgeError):
    """Quadratic pencil is numerically singular at the requested point."""


# ---------------------------------------------------------------------------
# calderon


class OutOfWindow(HHIForgeError):
    """Green kernel evaluated outside its time window."""


class Overflow(HHIForgeError):
    """A thermal factor evaluated to a non-finite number.

    The factors are computed in branch-stable hyperbolic form, so this
    signals corrupted input (NaN eigenvalues, beta <= 0) rather than a large
    ``beta * lambda``.
    """


class FrameMismatch(HHIForgeError):
    """Projector pair is not in the frame the conversion expects."""


# ---------------------------------------------------------------------------
# states


class BasisMismatch(HHIForgeError):
    """Vector length does not match the doubled one-particle space."""


class ChargeSingular(HHIForgeError):
    """Charge form is numerically singular; purity test undefined."""


class ReflectionInconsistent(HHIForgeError):
    """Slice profiles violate the parity conditions of the wedge reflection."""


# ---------------------------------------------------------------------------
# euclid


class NotSectorial(HHIForgeError):
    """Complex metric fails the uniform sectoriality bounds."""


class GridMisaligned(HHIForgeError):
    """Requested trace line does not fall on the periodic grid."""


class SolveFailed(HHIForgeError):
    """Direct elliptic solve failed or did not reach refinement tolerance."""


class JumpDefect(HHIForgeError):
    """Layer-potential jump relations are violated beyond tolerance."""


class ParityViolation(HHIForgeError):
    """Slice profiles do not fit the even/odd parity family."""


class WrongTemperature(HHIForgeError):
    """Disk extension requested at a temperature other than 2*pi/kappa."""


# ---------------------------------------------------------------------------
# cli


class ConfigError(HHIForgeError):
    """Experiment configuration file is missing keys or has bad values."""
