"""Green kernels of the first-order generator and spectral Calderón pairs.

For a Gram-self-adjoint generator ``b`` with a spectral gap at zero, the
imaginary-time Green kernel on the line (``beta = inf``) is

    G_inf(s) = e^{-s b} ( 1_{s>0} 1_{b>0} - 1_{s<0} 1_{b<0} ),

and on the circle of circumference ``beta`` (window ``[-beta, beta]``)

    G_beta(s) = e^{-s b} ( 1_{s>=0} (1 - e^{-beta b})^{-1}
                         - 1_{s<0}  (1 - e^{+beta b})^{-1} ).

Both are assembled by functional calculus with *branch-stable* scalar
factors: every thermal coefficient is reduced to ``expm1`` expressions whose
exponents are nonpositive, so nothing overflows no matter how large
``beta * |eigenvalue|`` gets.  At the midpoints ``s = ±beta/2`` a single
``1/(2 sinh(beta b / 2))`` code path is used for both signs, making the
endpoint identity ``G(beta/2) = G(-beta/2)`` bitwise exact.

The boundary values of these kernels assemble projector pairs:

* vacuum (one copy):      ``c^± = 1_{R±}(b)``;
* thermal (two copies, ordered ``(s = 0, s = beta/2)``):

      c_beta^+ = [[ A, -S], [ S, B]],    c_beta^- = [[ B,  S], [-S, A]],

  with ``A = (1-e^{-beta b})^{-1}``, ``B = (1-e^{beta b})^{-1} = 1 - A`` and
  ``S = (2 sinh(beta b/2))^{-1}``.  These are complementary idempotents.

Frame chain: the pairs above are *abstract* (they act on boundary data of the
generator's own space).  ``to_tilde`` conjugates the second copy with the
component flip ``T = diag(1, -1)`` (unit-lapse boundary data), ``to_lapse``
conjugates every copy with ``Z = diag(N, 1)`` (physical-lapse data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FrameMismatch, OutOfWindow, Overflow
from .model import FirstOrderSystem
from .spectral import SpectralSystem, apply_function

FRAMES = ("abstract", "tilde", "lapse")


# ---------------------------------------------------------------------------
# branch-stable scalar factors


def bose_factor(x: float) -> float:
    """``(e^x - 1)^{-1}``, stable for all nonzero real ``x``."""
    if x > 0:
        # keep exponents nonpositive: e^{-x} / (1 - e^{-x})
        return math.exp(-x) / (-math.expm1(-x))
    return 1.0 / math.expm1(x)


def thermal_plus(x: float) -> float:
    """``(1 - e^{-x})^{-1}`` via ``expm1`` (equals ``1 + bose_factor(x)``)."""
    if x > 0:
        return 1.0 / (-math.expm1(-x))
    # x < 0: multiply through by e^{x} to keep exponents nonpositive
    return math.exp(x) / math.expm1(x)


def thermal_minus(x: float) -> float:
    """``(1 - e^{x})^{-1} = -bose_factor(x)``."""
    if x > 0:
        return -math.exp(-x) / (-math.expm1(-x))
    return -1.0 / math.expm1(x)


def csch_half(x: float) -> float:
    """``(2 sinh(x/2))^{-1}``, odd and overflow-free."""
    ax = abs(x)
    value = math.exp(-0.5 * ax) / (-math.expm1(-ax))
    return math.copysign(value, x)


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise Overflow(f"{what} evaluated to {value!r}")
    return value


# ---------------------------------------------------------------------------
# Green kernel


@dataclass(frozen=True, eq=False)
class GreenKernel:
    """Imaginary-time Green kernel of a spectrally-gapped generator.

    ``beta = math.inf`` selects the line kernel, finite ``beta`` the circle
    kernel with evaluation window ``[-beta, beta]``.
    """

    base: SpectralSystem
    beta: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive (math.inf for the line kernel)")


def _scalar_green(lam: float, s: float, beta: float, side: int) -> float:
    """G_beta(s) at one eigenvalue; ``side`` disambiguates s = 0."""
    positive_side = s > 0 or (s == 0 and side > 0)
    if math.isinf(beta):
        if positive_side:
            return math.exp(-s * lam) if lam > 0 else 0.0
        return -math.exp(-s * lam) if lam < 0 else 0.0

    if abs(s) == 0.5 * beta:
        # one code path for both endpoints: bitwise-equal values
        return _checked(csch_half(beta * lam), "midpoint csch factor")

    if positive_side:
        if lam > 0:
            value = math.exp(-s * lam) / (-math.expm1(-beta * lam))
        else:
            # e^{-s lam} (1 - e^{-beta lam})^{-1} = e^{(beta-s) lam} / expm1(beta lam)
            value = math.exp((beta - s) * lam) / math.expm1(beta * lam)
    else:
        if lam > 0:
            # -e^{-s lam} (1 - e^{beta lam})^{-1} = e^{-(s+beta) lam} / (-expm1(-beta lam))
            value = math.exp(-(s + beta) * lam) / (-math.expm1(-beta * lam))
        else:
            value = -math.exp(-s * lam) / (-math.expm1(beta * lam))
    return _checked(value, f"thermal factor at eigenvalue {lam}")


def green_eval(kernel: GreenKernel, s: float, side: int = +1) -> np.ndarray:
    """Evaluate the kernel matrix at imaginary time ``s``.

    Parameters
    ----------
    s:
        Time in ``[-beta, beta]`` (any finite value for ``beta = inf``).
    side:
        Which one-sided limit to take at the jump ``s = 0``: ``+1`` for
        ``G(0^+)``, ``-1`` for ``G(0^-)``.  Ignored elsewhere.

    Raises
    ------
    OutOfWindow
        If ``|s| > beta``.
    """
    s = float(s)
    if abs(s) > kernel.beta:
        raise OutOfWindow(f"|s| = {abs(s)} outside window [-{kernel.beta}, {kernel.beta}]")
    return apply_function(
        kernel.base, lambda lam: _scalar_green(lam, s, kernel.beta, side)
    )


def green_jump_defect(kernel: GreenKernel) -> float:
    """``||G(0^+) - G(0^-) - 1||`` — the characteristic delta of the kernel."""
    jump = green_eval(kernel, 0.0, side=+1) - green_eval(kernel, 0.0, side=-1)
    return float(np.linalg.norm(jump - np.eye(kernel.base.dim), 2))


# ---------------------------------------------------------------------------
# projector pairs


@dataclass(frozen=True, eq=False)
class CalderonPair:
    """A complementary pair of boundary projectors.

    ``copies`` is 1 for the vacuum (line) pair and 2 for thermal pairs, whose
    copy ordering is ``(s = 0, s = beta/2)``.  ``halves`` is the component
    size: each copy acts on Cauchy-type data ``(f0, f1)`` of ``2 * halves``
    entries.  ``frame`` walks the chain abstract -> tilde -> lapse.
    """

    plus: np.ndarray
    minus: np.ndarray
    frame: str
    beta: float
    copies: int
    halves: int

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        expected = 2 * self.halves * self.copies
        if self.plus.shape != (expected, expected) or self.minus.shape != self.plus.shape:
            raise ValueError("projector blocks have inconsistent shapes")

    @property
    def dim(self) -> int:
        return self.plus.shape[0]

    def defects(self) -> dict:
        """Idempotency and complementarity defects (spectral norms)."""
        eye = np.eye(self.dim)
        return {
            "idempotent_plus": float(np.linalg.norm(self.plus @ self.plus - self.plus, 2)),
            "idempotent_minus": float(
                np.linalg.norm(self.minus @ self.minus - self.minus, 2)
            ),
            "complementarity": float(np.linalg.norm(self.plus + self.minus - eye, 2)),
        }


def calderon_vacuum(system: SpectralSystem) -> CalderonPair:
    """Vacuum pair ``c^± = 1_{R±}(b)`` (abstract frame, one copy)."""
    plus = apply_function(system, lambda x: 1.0 if x > 0 else 0.0)
    minus = apply_function(system, lambda x: 1.0 if x < 0 else 0.0)
    return CalderonPair(
        plus=plus,
        minus=minus,
        frame="abstract",
        beta=math.inf,
        copies=1,
        halves=system.dim // 2,
    )


def calderon_thermal(system: SpectralSystem, beta: float) -> CalderonPair:
    """Thermal pair on two boundary copies ``(s = 0, s = beta/2)``, abstract frame."""
    if not (0 < beta < math.inf):
        raise ValueError("calderon_thermal needs finite positive beta")
    a = apply_function(system, lambda x: _checked(thermal_plus(beta * x), "A factor"))
    b = apply_function(system, lambda x: _checked(thermal_minus(beta * x), "B factor"))
    s = apply_function(system, lambda x: _checked(csch_half(beta * x), "S factor"))
    plus = np.block([[a, -s], [s, b]])
    minus = np.block([[b, s], [-s, a]])
    return CalderonPair(
        plus=plus,
        minus=minus,
        frame="abstract",
        beta=float(beta),
        copies=2,
        halves=system.dim // 2,
    )


def _component_flip(halves: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(halves), -np.ones(halves)]))


def to_tilde(pair: CalderonPair) -> CalderonPair:
    """Abstract -> unit-lapse frame.

    For one copy this is the identity; for two copies the ``s = beta/2`` copy
    is conjugated with the component flip ``T = diag(1, -1)`` (the outward
    normal of the second boundary circle points the other way).
    """
    if pair.frame != "abstract":
        raise FrameMismatch(f"to_tilde expects an abstract-frame pair, got {pair.frame!r}")
    if pair.copies == 1:
        conj = np.eye(pair.dim)
    else:
        t = _component_flip(pair.halves)
        conj = np.block(
            [
                [np.eye(2 * pair.halves), np.zeros((2 * pair.halves, 2 * pair.halves))],
                [np.zeros((2 * pair.halves, 2 * pair.halves)), t],
            ]
        )
    # conj is involutive: conj^{-1} = conj
    return CalderonPair(
        plus=conj @ pair.plus @ conj,
        minus=conj @ pair.minus @ conj,
        frame="tilde",
        beta=pair.beta,
        copies=pair.copies,
        halves=pair.halves,
    )


def to_lapse(pair: CalderonPair, fos: FirstOrderSystem) -> CalderonPair:
    """Unit-lapse -> physical-lapse frame: conjugate each copy with ``Z = diag(N, 1)``."""
    if pair.frame != "tilde":
        raise FrameMismatch(f"to_lapse expects a tilde-frame pair, got {pair.frame!r}")
    if fos.n != pair.halves:
        raise FrameMismatch(
            f"system size {fos.n} does not match projector halves {pair.halves}"
        )
    z = fos.zmat
    blocks = [z] * pair.copies
    big = np.zeros((pair.dim, pair.dim))
    big_inv = np.zeros_like(big)
    m = 2 * pair.halves
    for c, blk in enumerate(blocks):
        big[c * m : (c + 1) * m, c * m : (c + 1) * m] = blk
        big_inv[c * m : (c + 1) * m, c * m : (c + 1) * m] = np.diag(1.0 / np.diag(blk))
    return CalderonPair(
        plus=big @ pair.plus @ big_inv,
        minus=big @ pair.minus @ big_inv,
        frame="lapse",
        beta=pair.beta,
        copies=pair.copies,
        halves=pair.halves,
    )


def spectral_pair(fos: FirstOrderSystem, beta: float) -> CalderonPair:
    """Full spectral-route chain to the lapse frame (vacuum for ``beta = inf``)."""
    if math.isinf(beta):
        abstract = calderon_vacuum(fos.system)
    else:
        abstract = calderon_thermal(fos.system, beta)
    return to_lapse(to_tilde(abstract), fos)
