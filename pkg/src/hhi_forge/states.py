"""Quasi-free state covariances: vacuum, thermal, doubled-thermal, wedge-glued.

A quasi-free state of the lattice field is a pair of two-point forms
``(lam_plus, lam_minus)`` with

    lam_plus >= 0,   lam_minus >= 0,   lam_plus - lam_minus = charge,

and it is *pure* exactly when ``c_pm = ±charge^{-1} lam_pm`` are complementary
idempotents.  This module builds the pairs by functional calculus of the
first-order generator:

* vacuum:            ``lam^± = ± q 1_{R±}(H)``  (pure);
* thermal at beta:   ``lam^+ = q (1 - e^{-beta H})^{-1}``,
                     ``lam^- = q (e^{beta H} - 1)^{-1}``  (mixed);
* doubled thermal:   pure state on two copies whose restriction to the first
                     copy is the thermal pair;
* wedge doubling:    pulls the doubled pair back along the mirror reflection,
                     producing the glued two-wedge covariance with charge
                     ``q ⊕ q``.

The doubled-thermal block signs follow the purification convention in which
both off-diagonal blocks are ``+ q S`` (``S = (2 sinh(beta H/2))^{-1}``); the
Araki-Woods oracle below reproduces exactly this orientation, and the mirror
pullback ``diag(1, -1) ⊕ 1`` of :func:`wedge_double` carries it onto the
boundary-projector convention used by the elliptic route.

Everything numerical here is branch-stable (no raw ``exp(beta * H)``), and the
purity test measures idempotency defects in the natural positive form
``lam_plus + lam_minus`` when it is invertible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calderon import csch_half, thermal_minus, thermal_plus
from .errors import (
    BasisMismatch,
    ChargeSingular,
    DegenerateGram,
    ReflectionInconsistent,
)
from .model import FirstOrderSystem, LatticeSlice
from .spectral import GramSpace, apply_function

_CHARGE_COND_MAX = 1e12
_PARITY_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """Two-point forms of a quasi-free state, with their commutator form.

    ``copies`` is 1 for single-wedge states and 2 for doubled ones; each copy
    holds Cauchy-type data of ``2 * halves`` entries.  ``frame`` is ``tilde``
    (unit-lapse data) or ``lapse`` (physical data); ``label`` names the state
    family for reports.
    """

    lam_plus: np.ndarray
    lam_minus: np.ndarray
    charge: np.ndarray
    frame: str
    beta: float
    copies: int
    halves: int
    label: str

    def __post_init__(self):
        expected = 2 * self.halves * self.copies
        for mat in (self.lam_plus, self.lam_minus, self.charge):
            if mat.shape != (expected, expected):
                raise ValueError("covariance blocks have inconsistent shapes")
        if self.frame not in ("tilde", "lapse"):
            raise ValueError(f"unknown frame {self.frame!r}")

    @property
    def dim(self) -> int:
        return self.lam_plus.shape[0]


# ---------------------------------------------------------------------------
# single-wedge states


def _lapse_vector(fos: FirstOrderSystem) -> np.ndarray:
    return np.real(np.diag(fos.zmat)[: fos.n]).copy()


def _physical_charge(fos: FirstOrderSystem) -> np.ndarray:
    """Charge form on physical (lapse-frame) data: Gram of ``|h|^{1/2} dy``."""
    gram_h = fos.gram_ht / _lapse_vector(fos)
    zero = np.zeros((fos.n, fos.n))
    gmat = np.diag(gram_h)
    return np.block([[zero, gmat], [gmat, zero]]).astype(complex)


def _frame_pullback(mat: np.ndarray, fos: FirstOrderSystem, copies: int) -> np.ndarray:
    """Pull a tilde-frame form back to lapse-frame data: ``Z^{-H} m Z^{-1}``."""
    zinv = 1.0 / np.real(np.diag(fos.zmat))
    scale = np.concatenate([zinv] * copies)
    return scale[:, None] * mat * scale[None, :]


def vacuum_covariances(fos: FirstOrderSystem) -> CovariancePair:
    """Ground-state pair on physical data (pure, frame ``lapse``)."""
    lam_plus_t = fos.charge @ apply_function(fos.system, lambda x: 1.0 if x > 0 else 0.0)
    lam_minus_t = -fos.charge @ apply_function(
        fos.system, lambda x: 1.0 if x < 0 else 0.0
    )
    return CovariancePair(
        lam_plus=_frame_pullback(lam_plus_t, fos, 1),
        lam_minus=_frame_pullback(lam_minus_t, fos, 1),
        charge=_physical_charge(fos),
        frame="lapse",
        beta=math.inf,
        copies=1,
        halves=fos.n,
        label="vacuum",
    )


def kms_covariances(fos: FirstOrderSystem, beta: float) -> CovariancePair:
    """Thermal pair at inverse temperature ``beta`` on unit-lapse data."""
    if not (0 < beta < math.inf):
        raise ValueError("kms_covariances needs finite positive beta")
    lam_plus = fos.charge @ apply_function(fos.system, lambda x: thermal_plus(beta * x))
    lam_minus = fos.charge @ apply_function(
        fos.system, lambda x: -thermal_minus(beta * x)
    )
    return CovariancePair(
        lam_plus=lam_plus,
        lam_minus=lam_minus,
        charge=fos.charge.copy(),
        frame="tilde",
        beta=float(beta),
        copies=1,
        halves=fos.n,
        label="kms",
    )


def double_kms_covariances(
    fos: FirstOrderSystem, beta: float, frame: str = "lapse"
) -> CovariancePair:
    """Purified thermal pair on two copies (restriction to copy 1 is thermal).

    Copy ordering ``(wedge, mirror)``; commutator form ``q ⊕ (-q)`` — the
    mirror copy runs backwards in time.  ``frame`` selects ``tilde`` or
    ``lapse`` output data.
    """
    if not (0 < beta < math.inf):
        raise ValueError("double_kms_covariances needs finite positive beta")
    if frame not in ("tilde", "lapse"):
        raise ValueError(f"unknown frame {frame!r}")
    a = apply_function(fos.system, lambda x: thermal_plus(beta * x))
    b = apply_function(fos.system, lambda x: thermal_minus(beta * x))
    s = apply_function(fos.system, lambda x: csch_half(beta * x))
    q = fos.charge
    qa, qb, qs = q @ a, q @ b, q @ s
    lam_plus = np.block([[qa, qs], [qs, -qb]])
    lam_minus = np.block([[-qb, qs], [qs, qa]])
    zero = np.zeros_like(q)
    charge = np.block([[q, zero], [zero, -q]])
    if frame == "lapse":
        lam_plus = _frame_pullback(lam_plus, fos, 2)
        lam_minus = _frame_pullback(lam_minus, fos, 2)
        charge = _frame_pullback(charge, fos, 2)
    return CovariancePair(
        lam_plus=lam_plus,
        lam_minus=lam_minus,
        charge=charge,
        frame=frame,
        beta=float(beta),
        copies=2,
        halves=fos.n,
        label="double_kms",
    )


# ---------------------------------------------------------------------------
# Araki-Woods oracle


@dataclass(frozen=True, eq=False)
class AWOracle:
    """Doubled GNS data of the thermal state, independent of block formulas.

    Works entirely in the generator's eigenbasis: ``coeff_map @ x`` expands
    unit-lapse data in energy-orthonormal eigenvectors, ``occupations`` are
    Bose numbers of ``|eigenvalue|`` and ``weights`` the ``1/|eigenvalue|``
    one-particle norms.
    """

    fos: FirstOrderSystem
    beta: float
    coeff_map: np.ndarray
    eigenvalues: np.ndarray
    weights: np.ndarray
    occupations: np.ndarray


def araki_woods_oracle(fos: FirstOrderSystem, beta: float) -> AWOracle:
    if not (0 < beta < math.inf):
        raise ValueError("araki_woods_oracle needs finite positive beta")
    sys = fos.system
    lam = sys.raw_eigenvalues
    coeff_map = sys.vectors.conj().T @ fos.energy
    weights = 1.0 / np.abs(lam)
    occupations = np.array([1.0 / math.expm1(beta * abs(v)) for v in lam])
    return AWOracle(
        fos=fos,
        beta=float(beta),
        coeff_map=coeff_map,
        eigenvalues=lam.copy(),
        weights=weights,
        occupations=occupations,
    )


def _slot_vectors(oracle: AWOracle, x: np.ndarray, create: bool):
    """One-particle components of ``Psi^{(*)}(x) Omega`` in the eigenbasis.

    Slot 1 lives in the positive-frequency factor, slot 2 in the conjugate
    negative-frequency factor; creation populates ``(+, -)`` supports and
    annihilation the mirrored ones.
    """
    two_n = 2 * oracle.fos.n
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape != (2 * two_n,):
        raise BasisMismatch(
            f"expected doubled data of length {2 * two_n}, got {x.shape[0]}"
        )
    a = oracle.coeff_map @ x[:two_n]
    b = oracle.coeff_map @ x[two_n:]
    rp1 = np.sqrt(oracle.occupations + 1.0)
    rp = np.sqrt(oracle.occupations)
    mask_pos = oracle.eigenvalues > 0
    mask_neg = ~mask_pos
    first = rp1 * a + rp * b
    second = rp * a + rp1 * b
    if create:
        return first * mask_pos, second * mask_neg
    return first * mask_neg, second * mask_pos


def araki_woods_pairing(
    oracle: AWOracle, x1: np.ndarray, x2: np.ndarray, kinds: tuple = ("", "*")
) -> complex:
    """Thermal two-point value ``omega(Psi^{k1}(x1) Psi^{k2}(x2))``.

    ``kinds`` entries are ``""`` for the field and ``"*"`` for its adjoint.
    Same-kind pairings vanish through disjoint slot supports (the sums are
    still carried out honestly).
    """
    kinds = tuple(kinds)
    for kind in kinds:
        if kind not in ("", "*"):
            raise ValueError(f"kinds must be '' or '*', got {kind!r}")
    # left factor contributes through its adjoint acting on the GNS vector
    left = _slot_vectors(oracle, x1, create=(kinds[0] == ""))
    right = _slot_vectors(oracle, x2, create=(kinds[1] == "*"))
    mu = oracle.weights
    plain = np.sum(np.conj(left[0]) * right[0] * mu) + np.sum(
        np.conj(left[1]) * right[1] * mu
    )
    if kinds == ("*", ""):
        return complex(np.conj(plain))
    return complex(plain)


def aw_covariance_matrices(oracle: AWOracle):
    """Assemble ``(lam_plus, lam_minus)`` of the doubled state entry by entry.

    Returns unit-lapse-frame matrices built solely from slot pairings, for
    cross-checking :func:`double_kms_covariances`.
    """
    two_n = 2 * oracle.fos.n
    c = oracle.coeff_map
    rp1 = np.sqrt(oracle.occupations + 1.0)[:, None]
    rp = np.sqrt(oracle.occupations)[:, None]
    mask_pos = (oracle.eigenvalues > 0)[:, None]
    mask_neg = ~mask_pos
    mu = oracle.weights[:, None]
    first = np.hstack([rp1 * c, rp * c])
    second = np.hstack([rp * c, rp1 * c])
    lam_plus = (first * mask_pos).conj().T @ (mu * mask_pos * first) + (
        second * mask_neg
    ).conj().T @ (mu * mask_neg * second)
    lam_minus = (first * mask_neg).conj().T @ (mu * mask_neg * first) + (
        second * mask_pos
    ).conj().T @ (mu * mask_pos * second)
    assert lam_plus.shape == (2 * two_n, 2 * two_n)
    return lam_plus, lam_minus


# ---------------------------------------------------------------------------
# wedge reflection and doubling


def _parity_residual(nodes: np.ndarray, values: np.ndarray, odd: bool) -> float:
    """Relative misfit of ``values`` against the parity polynomial family.

    Odd profiles are fit on ``{y, y^3, y^5}``, even ones on ``{1, y^2, y^4}``.
    Certification is within this family; smooth profiles outside it are
    rejected conservatively.
    """
    powers = (1, 3, 5) if odd else (0, 2, 4)
    cols = [nodes.astype(float) ** p for p in powers[: max(1, min(3, nodes.size))]]
    basis = np.stack(cols, axis=1)
    coeff, *_ = np.linalg.lstsq(basis, values.astype(float), rcond=None)
    resid = values - basis @ coeff
    scale = max(float(np.max(np.abs(values))), 1e-30)
    return float(np.max(np.abs(resid))) / scale


@dataclass(frozen=True, eq=False)
class WedgeReflection:
    """Mirror map between a wedge slice and its reflected copy.

    ``index_map[j]`` is the node of the mirror slice matching node ``j``;
    with both wedges sampled on the same staggered grid it is the identity.
    The residuals record how well each profile fits its required parity
    (lapse and shift odd, weight and potential even).
    """

    n: int
    index_map: np.ndarray
    lapse_residual: float
    shift_residual: float
    weight_residual: float
    potential_residual: float

    def __post_init__(self):
        perm = self.index_map
        if perm.shape != (self.n,) or not np.array_equal(
            np.sort(perm), np.arange(self.n)
        ):
            raise ValueError("index_map must be a permutation of the nodes")
        if not np.array_equal(perm[perm], np.arange(self.n)):
            raise ValueError("index_map must be an involution")

    @classmethod
    def for_slice(cls, slc: LatticeSlice, tol: float = _PARITY_RTOL):
        nodes = slc.nodes
        residuals = {
            "lapse": _parity_residual(nodes, slc.lapse, odd=True),
            "shift": _parity_residual(nodes, slc.shift, odd=True),
            "weight": _parity_residual(nodes, slc.weight, odd=False),
            "potential": _parity_residual(nodes, slc.potential, odd=False),
        }
        bad = [f"{k} (residual {v:.2e})" for k, v in residuals.items() if v > tol]
        if bad:
            raise ReflectionInconsistent(
                "profiles violate mirror parity: " + ", ".join(bad)
            )
        return cls(
            n=slc.n,
            index_map=np.arange(slc.n),
            lapse_residual=residuals["lapse"],
            shift_residual=residuals["shift"],
            weight_residual=residuals["weight"],
            potential_residual=residuals["potential"],
        )


def wedge_double(pair: CovariancePair, reflection: WedgeReflection) -> CovariancePair:
    """Pull a doubled pair back along the mirror reflection.

    The mirror copy's value component changes sign and both components are
    relabelled by ``index_map``; the pullback sends the doubled-thermal
    commutator form ``q ⊕ (-q)`` to the glued two-wedge form ``q ⊕ q``.
    """
    if pair.copies != 2:
        raise ReflectionInconsistent("wedge doubling needs a two-copy pair")
    if reflection.n != pair.halves:
        raise ReflectionInconsistent(
            f"reflection has {reflection.n} nodes, pair has {pair.halves}"
        )
    n = pair.halves
    perm = np.eye(n)[:, reflection.index_map]
    mirror = np.block(
        [[-perm, np.zeros((n, n))], [np.zeros((n, n)), perm]]
    )
    m = np.block(
        [
            [np.eye(2 * n), np.zeros((2 * n, 2 * n))],
            [np.zeros((2 * n, 2 * n)), mirror],
        ]
    )
    pull = lambda mat: m.conj().T @ mat @ m  # noqa: E731
    return CovariancePair(
        lam_plus=pull(pair.lam_plus),
        lam_minus=pull(pair.lam_minus),
        charge=pull(pair.charge),
        frame=pair.frame,
        beta=pair.beta,
        copies=2,
        halves=n,
        label="wedge_doubled",
    )


# ---------------------------------------------------------------------------
# state checks


@dataclass(frozen=True)
class StateReport:
    """Positivity and commutator diagnostics of a covariance pair."""

    min_eig_plus: float
    min_eig_minus: float
    ccr_defect: float
    herm_defect_plus: float
    herm_defect_minus: float
    norm_plus: float
    norm_minus: float


def validate_state(pair: CovariancePair) -> StateReport:
    """Measure positivity and the commutator identity (no thresholds applied)."""

    def herm_defect(mat):
        scale = max(np.linalg.norm(mat, 2), 1e-300)
        return float(np.linalg.norm(mat - mat.conj().T, 2) / scale)

    sym_plus = 0.5 * (pair.lam_plus + pair.lam_plus.conj().T)
    sym_minus = 0.5 * (pair.lam_minus + pair.lam_minus.conj().T)
    ccr = np.linalg.norm(pair.lam_plus - pair.lam_minus - pair.charge, 2)
    return StateReport(
        min_eig_plus=float(np.min(np.linalg.eigvalsh(sym_plus))),
        min_eig_minus=float(np.min(np.linalg.eigvalsh(sym_minus))),
        ccr_defect=float(ccr / max(np.linalg.norm(pair.charge, 2), 1e-300)),
        herm_defect_plus=herm_defect(pair.lam_plus),
        herm_defect_minus=herm_defect(pair.lam_minus),
        norm_plus=float(np.linalg.norm(pair.lam_plus, 2)),
        norm_minus=float(np.linalg.norm(pair.lam_minus, 2)),
    )


@dataclass(frozen=True)
class PurityReport:
    """Idempotency diagnostics of ``c_pm = ±charge^{-1} lam_pm``."""

    defect_plus: float
    defect_minus: float
    complementarity: float
    gram_conditioning: float
    used_fallback_norm: bool

    @property
    def purity_defect(self) -> float:
        return max(self.defect_plus, self.defect_minus)


def check_purity(pair: CovariancePair) -> PurityReport:
    """Idempotency of the spectral factors, measured in the state's own form.

    The natural norm is the operator norm of ``lam_plus + lam_minus`` viewed
    as a Gram form; if that form is numerically degenerate the plain spectral
    norm is used and flagged.  A pure state has ``purity_defect`` at roundoff;
    a thermal single wedge has it of order one.
    """
    cond = np.linalg.cond(pair.charge)
    if not np.isfinite(cond) or cond > _CHARGE_COND_MAX:
        raise ChargeSingular(f"charge form condition number {cond:.3e}")
    c_plus = np.linalg.solve(pair.charge, pair.lam_plus)
    c_minus = -np.linalg.solve(pair.charge, pair.lam_minus)
    gram = 0.5 * (pair.lam_plus + pair.lam_minus)
    gram = 0.5 * (gram + gram.conj().T)
    used_fallback = False
    try:
        space = GramSpace(gram=gram)
        norm = space.opnorm
    except DegenerateGram:
        used_fallback = True
        norm = lambda mat: float(np.linalg.norm(mat, 2))  # noqa: E731
    eye = np.eye(pair.dim)
    return PurityReport(
        defect_plus=float(norm(c_plus @ c_plus - c_plus)),
        defect_minus=float(norm(c_minus @ c_minus - c_minus)),
        complementarity=float(norm(c_plus + c_minus - eye)),
        gram_conditioning=float(np.linalg.cond(gram)),
        used_fallback_norm=used_fallback,
    )


def kms_detailed_balance(fos: FirstOrderSystem, beta: float) -> float:
    """Relative defect of ``c_minus = e^{-beta H} c_plus`` for the thermal pair."""
    pair = kms_covariances(fos, beta)
    c_plus = np.linalg.solve(fos.charge, pair.lam_plus)
    c_minus = np.linalg.solve(fos.charge, pair.lam_minus)
    damp = apply_function(fos.system, lambda x: math.exp(-beta * x))
    defect = np.linalg.norm(c_minus - damp @ c_plus, 2)
    return float(defect / np.linalg.norm(c_plus, 2))
