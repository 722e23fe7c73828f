"""Lattice models of a Klein-Gordon field on a stationary 1+1 slab.

A slice is the interval ``(0, L)`` with a staggered uniform grid
``y_j = (j + 1/2) dy`` and a Dirichlet wall at ``y = L`` (zero ghost nodes on
both sides).  The background is stationary data on the slice: lapse ``N > 0``
on nodes (it may degenerate at the inner end ``y -> 0`` in the continuum, the
staggered grid never puts a node there), a shift component ``w``, a metric
weight ``rho = |h|^{1/2} > 0`` and a potential ``m >= m0^2 > 0``.

Two scalar products appear throughout:

* ``H`` — ``L^2(S, |h|^{1/2} dy)``, diagonal Gram ``rho * dy``;
* ``H~`` — ``L^2(S, N |h|^{1/2} dy)``, diagonal Gram ``N * rho * dy``.

``assemble_spatial`` builds the second-order operators

    h0 = grad* (1/h) grad + m          (self-adjoint in H~)
    w_op = w d/dy                      (centered differences)
    h  = h0 - w* N^{-2} w_op

with *exact discrete Gram adjoints* (``w* = G~^{-1} w_op^H G~``), and
``lapse_reduce`` performs the reduction to unit lapse,

    h0~ = N h0 N,   w~ = N^{-1} w_op N,   h~ = h0~ - w~* w~,

assembling the first-order generator on Cauchy pairs ``(f0, f1)``

    H~ = [[-i w~, 1], [h0~, i w~*]],

its conserved energy form ``E~ = [[G~ h0~, i G~ w~*], [-i G~ w~, G~]]``
(Hermitian positive definite when the model hypotheses hold) and charge form
``q~ = [[0, G~], [G~, 0]]``, which satisfy ``E~ = q~ H~`` as matrices.  The
generator is diagonalized in the energy Gram, powering every spectral-route
construction downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import HypothesisViolation, PencilSingular
from .spectral import (
    GramSpace,
    SpectralSystem,
    apply_function,
    gen_eig_range,
    gram_eigendecompose,
)

_PENCIL_COND_MAX = 1e12
_FACTORIZATION_RTOL = 1e-12


def _node_array(values, n, name):
    arr = np.broadcast_to(np.asarray(values, dtype=float), (n,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class LatticeSlice:
    """Stationary background data sampled on a staggered grid over ``(0, L)``.

    Parameters
    ----------
    length:
        Slab width ``L``; the outer Dirichlet wall sits at ``y = L``.
    lapse, shift, weight, potential:
        Node arrays (or scalars) for ``N``, ``w``, ``|h|^{1/2}`` and ``m``.
    lapse_face, weight_face:
        Optional values of ``N`` and ``|h|^{1/2}`` on the ``n + 1`` faces
        ``y = j dy``.  When omitted they are interpolated from the nodes
        (arithmetic mean; nearest node at the two boundary faces).
        :meth:`from_profiles` fills them by exact evaluation instead.
    """

    n: int
    length: float
    lapse: np.ndarray
    shift: np.ndarray
    weight: np.ndarray
    potential: np.ndarray
    lapse_face: np.ndarray | None = None
    weight_face: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one interior node")
        if not self.length > 0:
            raise ValueError("slab length must be positive")
        object.__setattr__(self, "lapse", _node_array(self.lapse, self.n, "lapse"))
        object.__setattr__(self, "shift", _node_array(self.shift, self.n, "shift"))
        object.__setattr__(self, "weight", _node_array(self.weight, self.n, "weight"))
        object.__setattr__(
            self, "potential", _node_array(self.potential, self.n, "potential")
        )
        if np.any(self.lapse <= 0):
            raise ValueError("lapse must be positive on every node")
        if np.any(self.weight <= 0):
            raise ValueError("metric weight must be positive")
        if np.any(self.potential <= 0):
            raise ValueError("potential must be bounded below by a positive mass^2")
        for attr in ("lapse_face", "weight_face"):
            values = getattr(self, attr)
            if values is None:
                nodes = self.lapse if attr == "lapse_face" else self.weight
                faces = np.empty(self.n + 1)
                faces[1:-1] = 0.5 * (nodes[:-1] + nodes[1:])
                faces[0] = nodes[0]
                faces[-1] = nodes[-1]
                object.__setattr__(self, attr, faces)
            else:
                arr = np.asarray(values, dtype=float)
                if arr.shape != (self.n + 1,):
                    raise ValueError(f"{attr} must have n + 1 entries")
                object.__setattr__(self, attr, arr.copy())

    @classmethod
    def from_profiles(
        cls,
        n: int,
        length: float,
        lapse: Callable[[np.ndarray], np.ndarray],
        shift: Callable[[np.ndarray], np.ndarray] | float = 0.0,
        weight: Callable[[np.ndarray], np.ndarray] | float = 1.0,
        potential: Callable[[np.ndarray], np.ndarray] | float = 1.0,
    ) -> "LatticeSlice":
        """Sample callables (or constants) on nodes and faces."""
        dy = length / n
        nodes = (np.arange(n) + 0.5) * dy
        faces = np.arange(n + 1) * dy

        def ev(f, x):
            if callable(f):
                return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
            return np.full(x.shape, float(f))

        return cls(
            n=n,
            length=float(length),
            lapse=ev(lapse, nodes),
            shift=ev(shift, nodes),
            weight=ev(weight, nodes),
            potential=ev(potential, nodes),
            lapse_face=ev(lapse, faces),
            weight_face=ev(weight, faces),
        )

    @property
    def dy(self) -> float:
        return self.length / self.n

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dy

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dy


def wedge_slice(
    n: int,
    length: float = 1.0,
    kappa: float = 1.0,
    eps: float = 0.0,
    m0: float = 1.0,
) -> LatticeSlice:
    """Boost-wedge model family: ``N = kappa y``, ``w = eps y^3``, unit weight.

    The lapse vanishes linearly at the inner end (a bifurcation point with
    surface gravity ``kappa``), the shift is odd, and the potential is the
    constant ``m0^2``.  This is the family every reflection-positive
    construction in :mod:`hhi_forge.euclid` accepts, and the one the command
    line front end builds from its config.
    """
    return LatticeSlice.from_profiles(
        n=n,
        length=length,
        lapse=lambda y: kappa * y,
        shift=(lambda y: eps * y**3) if eps else 0.0,
        weight=1.0,
        potential=m0**2,
    )


@dataclass(frozen=True, eq=False)
class SpatialOperators:
    """Second-order spatial operators of a slice, with their diagonal Grams."""

    slice: LatticeSlice
    gram_h: np.ndarray  # diagonal of the |h|^{1/2} dy Gram
    gram_ht: np.ndarray  # diagonal of the N |h|^{1/2} dy Gram
    h0: np.ndarray
    w_op: np.ndarray
    w_star: np.ndarray
    h: np.ndarray


def _centered_difference(n: int, dy: float) -> np.ndarray:
    d = np.zeros((n, n))
    for j in range(n):
        if j + 1 < n:
            d[j, j + 1] = 0.5 / dy
        if j - 1 >= 0:
            d[j, j - 1] = -0.5 / dy
    return d


def _forward_difference_to_faces(n: int, dy: float) -> np.ndarray:
    """(n+1) x n map u -> (u_j - u_{j-1})/dy with zero ghosts at both walls."""
    d = np.zeros((n + 1, n))
    for f in range(n + 1):
        if f < n:
            d[f, f] = 1.0 / dy
        if f - 1 >= 0:
            d[f, f - 1] = -1.0 / dy
    return d


def assemble_spatial(slc: LatticeSlice) -> SpatialOperators:
    """Build ``h0``, ``w_op``, ``w*`` and ``h`` for a slice.

    The stiffness part of ``h0`` is assembled in weak form with face
    coefficients ``(N / |h|^{1/2})(face)``; at the inner face the horizon
    degeneracy of the lapse turns the flux off naturally, the outer face is a
    Dirichlet wall.  ``w*`` is the exact discrete adjoint of ``w_op`` in the
    ``N |h|^{1/2} dy`` Gram.
    """
    n, dy = slc.n, slc.dy
    gram_h = slc.weight * dy
    gram_ht = slc.lapse * slc.weight * dy

    dfaces = _forward_difference_to_faces(n, dy)
    face_coeff = slc.lapse_face / slc.weight_face
    stiffness = dfaces.T @ np.diag(face_coeff * dy) @ dfaces
    mass = np.diag(slc.potential * gram_ht)
    h0 = np.diag(1.0 / gram_ht) @ (stiffness + mass)

    w_op = np.diag(slc.shift) @ _centered_difference(n, dy)
    w_star = np.diag(1.0 / gram_ht) @ w_op.conj().T @ np.diag(gram_ht)
    h = h0 - w_star @ np.diag(slc.lapse**-2) @ w_op

    return SpatialOperators(
        slice=slc,
        gram_h=gram_h,
        gram_ht=gram_ht,
        h0=h0,
        w_op=w_op,
        w_star=w_star,
        h=h,
    )


@dataclass(frozen=True, eq=False)
class CauchyData:
    """A pair ``(f0, f1)`` of field value and conjugate component."""

    f0: np.ndarray
    f1: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.f0), np.asarray(self.f1)])

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "CauchyData":
        vec = np.asarray(vec)
        n = vec.size // 2
        return cls(f0=vec[:n].copy(), f1=vec[n:].copy())


@dataclass(frozen=True, eq=False)
class FirstOrderSystem:
    """Unit-lapse reduction of a slice: generator, energy and charge forms.

    ``hmat`` is the first-order generator on Cauchy pairs; ``energy`` and
    ``charge`` are its invariant Hermitian forms with ``energy = charge @ hmat``
    exactly; ``system`` diagonalizes the generator in the energy Gram.
    ``zmat = diag(N, 1)`` converts between unit-lapse and lapse-frame data.
    """

    spatial: SpatialOperators | None
    gram_ht: np.ndarray
    h0t: np.ndarray
    wt: np.ndarray
    wt_star: np.ndarray
    ht: np.ndarray
    kt: np.ndarray
    hmat: np.ndarray
    energy: np.ndarray
    charge: np.ndarray
    zmat: np.ndarray
    espace: GramSpace = field(repr=False)
    system: SpectralSystem = field(repr=False)

    @property
    def n(self) -> int:
        return self.h0t.shape[0]

    @classmethod
    def from_tilde_operators(
        cls,
        h0t: np.ndarray,
        wt: np.ndarray | None = None,
        gram_ht: np.ndarray | None = None,
        lapse: np.ndarray | None = None,
        spatial: SpatialOperators | None = None,
    ) -> "FirstOrderSystem":
        """Assemble the first-order system directly from unit-lapse operators.

        Used both by :func:`lapse_reduce` and by tests that need exact control
        over the reduced operators (e.g. a single mode ``h0t = [[omega^2]]``).
        """
        h0t = np.asarray(h0t, dtype=complex)
        n = h0t.shape[0]
        if wt is None:
            wt = np.zeros((n, n), dtype=complex)
        wt = np.asarray(wt, dtype=complex)
        if gram_ht is None:
            gram_ht = np.ones(n)
        gram_ht = np.asarray(gram_ht, dtype=float)
        if lapse is None:
            lapse = np.ones(n)

        gmat = np.diag(gram_ht)
        wt_star = np.diag(1.0 / gram_ht) @ wt.conj().T @ gmat
        ht = h0t - wt_star @ wt
        kt = 0.5j * (wt_star - wt)

        zero = np.zeros((n, n), dtype=complex)
        eye = np.eye(n, dtype=complex)
        hmat = np.block([[-1j * wt, eye], [h0t, 1j * wt_star]])
        charge = np.block([[zero, gmat], [gmat, zero]]).astype(complex)
        energy = charge @ hmat
        energy = 0.5 * (energy + energy.conj().T)
        zmat = np.diag(np.concatenate([np.asarray(lapse, dtype=float), np.ones(n)]))

        espace = GramSpace(energy)
        system = gram_eigendecompose(espace, hmat)
        return cls(
            spatial=spatial,
            gram_ht=gram_ht,
            h0t=h0t,
            wt=wt,
            wt_star=wt_star,
            ht=ht,
            kt=kt,
            hmat=hmat,
            energy=energy,
            charge=charge,
            zmat=zmat,
            espace=espace,
            system=system,
        )


def lapse_reduce(spatial: SpatialOperators) -> FirstOrderSystem:
    """Reduce a slice model to unit lapse and build its first-order system.

    ``h0~ = N h0 N`` and ``w~ = N^{-1} w_op N`` keep all adjoints exact in the
    ``N |h|^{1/2} dy`` Gram; the energy form is positive definite whenever the
    uniform-timelikeness hypotheses hold (it is Cholesky-factorized here, so a
    badly broken model fails loudly).
    """
    lapse = spatial.slice.lapse
    nmat = np.diag(lapse)
    nmat_inv = np.diag(1.0 / lapse)
    h0t = nmat @ spatial.h0 @ nmat
    wt = nmat_inv @ spatial.w_op @ nmat
    return FirstOrderSystem.from_tilde_operators(
        h0t=h0t,
        wt=wt,
        gram_ht=spatial.gram_ht,
        lapse=lapse,
        spatial=spatial,
    )


@dataclass(frozen=True)
class HypothesisReport:
    """Quantitative model-hypothesis check, one field per item.

    ``shift_bound_operator``: smallest eigenvalue of
    ``(1-delta) h0~ - w~* w~`` in the unit-lapse Gram (must be >= 0).
    ``shift_bound_pointwise``: min of ``(1-delta) N^2 - w h w`` over nodes.
    ``wt_relative_norm`` / ``wt_star_relative_norm``: ``||w~ h0~^{-1/2}||``
    and ``||w~* h0~^{-1/2}||`` (must be < 1).
    ``equivalence_lower`` / ``equivalence_upper``: constants with
    ``c1 h0~ <= h~ <= c2 h0~`` (``c1`` must be positive).
    ``lapse_gradient_bound`` / ``shift_divergence_bound``: reported suprema of
    ``|N^{-2} w dN/dy|`` and ``|N^{-1} div w|`` (finite-difference estimates,
    informational).
    """

    delta: float
    shift_bound_operator: float
    shift_bound_pointwise: float
    wt_relative_norm: float
    wt_star_relative_norm: float
    equivalence_lower: float
    equivalence_upper: float
    lapse_gradient_bound: float
    shift_divergence_bound: float
    passed: bool
    failures: tuple = ()
    boundary_note: str = "outer boundary: Dirichlet wall (zero ghost) at y = L"


def validate_hypotheses(
    fos: FirstOrderSystem, delta: float = 0.1, strict: bool = False
) -> HypothesisReport:
    """Check the uniform-timelikeness and operator-domination hypotheses.

    Parameters
    ----------
    fos:
        First-order system from :func:`lapse_reduce`.
    delta:
        Uniformity margin in ``(0, 1)``; default 0.1.
    strict:
        Raise :class:`HypothesisViolation` on any failed item instead of
        returning a report with ``passed=False``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    gmat = np.diag(fos.gram_ht)
    gspace = GramSpace(gmat)

    bound_op = gmat @ ((1 - delta) * fos.h0t - fos.wt_star @ fos.wt)
    item_a, _ = gen_eig_range(gspace, 0.5 * (bound_op + bound_op.conj().T), gmat)

    if fos.spatial is not None:
        slc = fos.spatial.slice
        whw = slc.shift**2 * slc.weight**2
        item_b = float(np.min((1 - delta) * slc.lapse**2 - whw))
        dn = np.gradient(slc.lapse, slc.nodes)
        item_e1 = float(np.max(np.abs(slc.shift * dn / slc.lapse**2)))
        div_w = np.gradient(slc.weight * slc.shift, slc.nodes) / slc.weight
        item_e2 = float(np.max(np.abs(div_w / slc.lapse)))
    else:
        item_b = float("nan")
        item_e1 = float("nan")
        item_e2 = float("nan")

    h0t_sys = gram_eigendecompose(gspace, fos.h0t)
    inv_sqrt = apply_function(h0t_sys, lambda x: x**-0.5)
    item_c1 = gspace.opnorm(fos.wt @ inv_sqrt)
    item_c2 = gspace.opnorm(fos.wt_star @ inv_sqrt)

    ht_form = gmat @ fos.ht
    h0t_form = gmat @ fos.h0t
    c_lo, c_hi = gen_eig_range(
        gspace, 0.5 * (ht_form + ht_form.conj().T), 0.5 * (h0t_form + h0t_form.conj().T)
    )

    scale = gspace.opnorm(fos.h0t)
    failures = []
    if item_a < -1e-10 * scale:
        failures.append(f"operator shift bound violated (min eig {item_a:.3e})")
    if fos.spatial is not None and item_b < -1e-12 * float(np.max(fos.spatial.slice.lapse) ** 2):
        failures.append(f"pointwise timelikeness violated (margin {item_b:.3e})")
    if not item_c1 < 1.0:
        failures.append(f"||w~ h0~^-1/2|| = {item_c1:.6f} >= 1")
    if not item_c2 < 1.0:
        failures.append(f"||w~* h0~^-1/2|| = {item_c2:.6f} >= 1")
    if not c_lo > 0.0:
        failures.append(f"h~ not equivalent to h0~ from below (c1 = {c_lo:.3e})")

    report = HypothesisReport(
        delta=delta,
        shift_bound_operator=item_a,
        shift_bound_pointwise=item_b,
        wt_relative_norm=item_c1,
        wt_star_relative_norm=item_c2,
        equivalence_lower=c_lo,
        equivalence_upper=c_hi,
        lapse_gradient_bound=item_e1,
        shift_divergence_bound=item_e2,
        passed=not failures,
        failures=tuple(failures),
    )
    if strict and failures:
        raise HypothesisViolation("; ".join(failures))
    return report


def quadratic_pencil(fos: FirstOrderSystem, z: complex) -> np.ndarray:
    """Evaluate ``p(z) = z (2 k~ - z) + h~`` with a factorization cross-check.

    The equivalent product form ``(iz + w~*)(iz - w~) + h0~`` is computed as
    well; the two must agree to 1e-12 relative, which guards the adjoint
    bookkeeping of the assembled operators.
    """
    z = complex(z)
    n = fos.n
    eye = np.eye(n)
    direct = z * (2.0 * fos.kt - z * eye) + fos.ht
    factored = (1j * z * eye + fos.wt_star) @ (1j * z * eye - fos.wt) + fos.h0t
    scale = max(np.linalg.norm(direct), np.linalg.norm(factored), 1e-300)
    defect = np.linalg.norm(direct - factored) / scale
    if defect > _FACTORIZATION_RTOL:
        raise PencilSingular(
            f"pencil factorizations disagree (relative defect {defect:.3e})"
        )
    return direct


def resolvent(fos: FirstOrderSystem, z: complex) -> np.ndarray:
    """Resolvent ``(H~ - z)^{-1}`` via the quadratic pencil.

    In the upper-triangular ("hat") frame the resolvent has the closed form
    ``p(z)^{-1} [[z - 2k~, 1], [h~, z]]`` for ``z != 0`` and
    ``[[-2 h~^{-1} k~, h~^{-1}], [1, 0]]`` at ``z = 0``; conjugation with
    ``[[1, 0], [i w~, 1]]`` returns it to the physical frame.

    Raises
    ------
    PencilSingular
        If ``cond(p(z)) > 1e12`` (``z`` too close to the spectrum).
    """
    z = complex(z)
    n = fos.n
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)

    if z == 0:
        cond = np.linalg.cond(fos.ht)
        if not np.isfinite(cond) or cond > _PENCIL_COND_MAX:
            raise PencilSingular(f"h~ numerically singular (cond {cond:.3e})")
        lu, piv = sla.lu_factor(fos.ht)
        hinv_k = sla.lu_solve((lu, piv), fos.kt)
        hinv = sla.lu_solve((lu, piv), eye)
        rhat = np.block([[-2.0 * hinv_k, hinv], [eye, zero]])
    else:
        pencil = quadratic_pencil(fos, z)
        cond = np.linalg.cond(pencil)
        if not np.isfinite(cond) or cond > _PENCIL_COND_MAX:
            raise PencilSingular(f"pencil singular at z = {z} (cond {cond:.3e})")
        lu, piv = sla.lu_factor(pencil)
        top_left = sla.lu_solve((lu, piv), z * eye - 2.0 * fos.kt)
        pinv = sla.lu_solve((lu, piv), eye)
        bottom_left = sla.lu_solve((lu, piv), fos.ht)
        rhat = np.block([[top_left, pinv], [bottom_left, z * pinv]])

    u = np.block([[eye, zero], [1j * fos.wt, eye]])
    uinv = np.block([[eye, zero], [-1j * fos.wt, eye]])
    return u @ rhat @ uinv


def evolve(fos: FirstOrderSystem, data: CauchyData, t: float) -> CauchyData:
    """Propagate Cauchy data with ``exp(i t H~)`` (energy and charge preserving)."""
    propagator = apply_function(fos.system, lambda x: np.exp(1j * t * x))
    return CauchyData.from_vector(propagator @ data.vector())


def hat_isometry_defect(fos: FirstOrderSystem) -> float:
    """``||U* E~ U - E^||`` for ``U = [[1,0],[i w~,1]]`` — exact to roundoff.

    ``E^`` is the hat-frame energy ``[[G~ h~, 0], [0, G~]]``.
    """
    n = fos.n
    eye = np.eye(n, dtype=complex)
    zero = np.zeros((n, n), dtype=complex)
    u = np.block([[eye, zero], [1j * fos.wt, eye]])
    gmat = np.diag(fos.gram_ht)
    ehat = np.block([[gmat @ fos.ht, zero], [zero, gmat]])
    pulled = u.conj().T @ fos.energy @ u
    return float(np.linalg.norm(pulled - ehat) / max(np.linalg.norm(ehat), 1e-300))
