"""Imaginary-time route to the boundary projectors, plus the disk extension.

The spectral route (:mod:`hhi_forge.calderon`) reads every thermal projector
off the functional calculus of the first-order generator.  This module
rebuilds the same objects from the elliptic side and never touches that
calculus, so agreement of the two routes is a genuine cross-check:

* :func:`wick_rotate` turns a stationary slice into a complex 2d metric on
  the ``(s, y)`` cylinder (``s`` is imaginary time) and certifies that the
  rotated operator is sectorial (uniformly timelike background).
* :func:`assemble_cylinder` discretizes

      K = -(d/ds + i w*) N^{-2} (d/ds - i w) + h0

  on a periodic s-grid of circumference ``beta``.  All s-derivatives use the
  *centered* difference, the second-order term being the centered operator
  applied twice; with that choice every Fourier mode of the assembled matrix
  reproduces the quadratic pencil of the generator exactly,

      N K_k N = p(-i kappa_k),   kappa_k = sin(2 pi k / n_s) / ds,

  which :func:`cylinder_mode_defect` verifies to rounding.
* :func:`calderon_elliptic` places layer sources on the circles ``s = 0``
  and ``s = beta/2``, normalizes the resulting potentials to carry exact
  unit trace jumps, and reads complementary projectors off one-sided traces
  of the solves.  The trace data is physical (lapse-frame) Cauchy data:
  value ``u`` and conormal ``-N^{-1}(d/ds - i w)u`` at ``s = 0`` (``+N^{-1}``
  on the far circle, whose normal points the other way).  The centered
  stencil decouples the even and odd circle sublattices in its principal
  part, so a layer potential is two smooth interleaved fields rather than
  one; sources live on the even circles and the one-sided traces
  extrapolate the two sublattices separately and sum them (see
  :func:`_cylinder_trace`), which keeps the construction clean of
  checkerboard noise.
* :func:`extend_to_disk` fills the cylinder in across its inner edge: for
  reflection-symmetric backgrounds ``N = kappa y + d y^3``, ``w = b y^3`` at
  inverse temperature ``beta = 2 pi / kappa`` the rotated geometry extends
  over ``y = 0`` to a smooth complex metric on a disk, with the two-wedge
  slice as the horizontal diameter.  :func:`calderon_disk` splits diameter
  Cauchy data along the graphs of the two one-sided solution operators:
  each half disk contributes a flux map whose conormal is read from the
  half-domain sesquilinear form — an exact lattice Green identity, no
  one-sided stencils — so the resulting projectors are complementary
  idempotents by construction.  :func:`hhi_covariances` turns them into
  two-point forms of a glued two-wedge state, which :func:`gluing_error`
  compares against the wedge-doubled spectral construction
  (:func:`doubled_reference`) on smooth interior-supported probe data;
  same-node entries of two independent discretizations keep different
  lattice constants forever, so entrywise coincidence is the wrong ask.
* :func:`divergence_identity_check` validates the closed-form disk metric by
  computing the covariant divergence of a smooth vector field two ways
  (Christoffel contraction vs. the density identity); the two finite
  difference routes must agree to second order in the spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calderon import CalderonPair, spectral_pair
from .errors import (
    GridMisaligned,
    JumpDefect,
    NotSectorial,
    ParityViolation,
    SolveFailed,
    WrongTemperature,
)
from .model import (
    FirstOrderSystem,
    LatticeSlice,
    assemble_spatial,
    lapse_reduce,
    quadratic_pencil,
)
from .states import (
    CovariancePair,
    WedgeReflection,
    double_kms_covariances,
    wedge_double,
)

_REFINE_RTOL = 1e-8  # relative residual allowed after one refinement step
_JUMP_COND_MAX = 1e8  # conditioning bound on the raw trace jump of the sources
_FIT_RTOL = 1e-10  # relative residual allowed in background-family fits
_TEMP_RTOL = 1e-15  # relative mismatch allowed between beta and 2 pi / kappa


# ---------------------------------------------------------------------------
# Wick rotation


@dataclass(frozen=True, eq=False)
class ComplexMetric2D:
    """Complex metric of the rotated cylinder, sampled on the slice nodes.

    Components refer to coordinates ``(s, y)``:

        k_ss = N^2 - rho^2 w^2,   k_sy = -i rho^2 w,   k_yy = rho^2,

    with determinant ``N^2 rho^2`` (real and positive — the imaginary parts
    cancel exactly, which is what makes the rotated operator sectorial).
    ``sectorial_constant`` is ``max rho |w| / N``; the background is
    uniformly timelike iff it is below one.
    """

    nodes: np.ndarray
    k_ss: np.ndarray
    k_sy: np.ndarray
    k_yy: np.ndarray
    det: np.ndarray
    sectorial_constant: float


def wick_rotate(slc: LatticeSlice) -> ComplexMetric2D:
    """Rotate a stationary slice to imaginary time.

    Raises :class:`NotSectorial` when the shift is too large somewhere for
    the rotated operator to have numerical range in a half-plane (the
    elliptic solves downstream would be meaningless).
    """
    lapse = slc.lapse
    rho2 = slc.weight**2
    k_ss = lapse**2 - rho2 * slc.shift**2
    k_sy = -1j * rho2 * slc.shift
    k_yy = rho2
    det = lapse**2 * rho2
    constant = float(np.max(slc.weight * np.abs(slc.shift) / lapse))
    if constant >= 1.0:
        raise NotSectorial(
            f"rotated operator is not sectorial: max rho |w| / N = {constant:.6f} >= 1"
        )
    return ComplexMetric2D(
        nodes=slc.nodes.copy(),
        k_ss=k_ss,
        k_sy=k_sy,
        k_yy=k_yy,
        det=det,
        sectorial_constant=constant,
    )


# ---------------------------------------------------------------------------
# periodic cylinder


@dataclass(frozen=True, eq=False)
class CylinderProblem:
    """Assembled imaginary-time cylinder.

    The unknown vector is s-major: entry ``l * n + j`` holds the field at
    circle ``l`` and slice node ``j``.  ``kmat`` is the assembled operator,
    ``gram_vol`` the diagonal of the volume Gram ``ds * G~`` it is
    complex-symmetric against (``gram_vol @ kmat`` equals its own transpose).
    """

    slice: LatticeSlice
    fos: FirstOrderSystem = field(repr=False)
    metric: ComplexMetric2D = field(repr=False)
    beta: float
    n_s: int
    ds: float
    kmat: sp.csc_matrix = field(repr=False)
    gram_vol: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.slice.n

    @property
    def dim(self) -> int:
        return self.n_s * self.n

    @property
    def half_line(self) -> int:
        return self.n_s // 2


def _circulant_centered(n_s: int, ds: float) -> sp.csr_matrix:
    """Periodic centered first difference ``(u_{l+1} - u_{l-1}) / (2 ds)``."""
    c = 0.5 / ds
    rows = np.arange(n_s)
    data = np.concatenate([np.full(n_s, c), np.full(n_s, -c)])
    cols = np.concatenate([(rows + 1) % n_s, (rows - 1) % n_s])
    return sp.csr_matrix(
        (data, (np.concatenate([rows, rows]), cols)), shape=(n_s, n_s)
    )


def assemble_cylinder(slc: LatticeSlice, beta: float, n_s: int) -> CylinderProblem:
    """Assemble the rotated operator on a periodic cylinder of size ``n_s``.

    ``n_s`` must be a multiple of four: the far trace circle ``s = beta/2``
    has to lie on the grid *and* on the even sublattice that carries the
    layer potentials (see the module notes on parity).
    """
    if not (0 < beta < math.inf):
        raise ValueError("cylinder needs a finite positive beta")
    if n_s % 4 != 0 or n_s < 16:
        raise GridMisaligned(
            f"n_s = {n_s}: the trace circles need a grid size divisible by"
            " four and at least 16"
        )
    metric = wick_rotate(slc)  # validates sectoriality
    spatial = assemble_spatial(slc)
    fos = lapse_reduce(spatial)
    ds = beta / n_s
    n = slc.n

    d1 = _circulant_centered(n_s, ds)
    d2 = (d1 @ d1).tocsr()
    eye_s = sp.identity(n_s, format="csr")
    n2inv = np.diag(1.0 / slc.lapse**2)
    # K = -D_s N^{-2} D_s + i (N^{-2} w - w* N^{-2}) D_s + (h0 - w* N^{-2} w)
    first_order = n2inv @ spatial.w_op - spatial.w_star @ n2inv
    kmat = (
        sp.kron(-d2, sp.csr_matrix(n2inv.astype(complex)))
        + sp.kron(d1, sp.csr_matrix(1j * first_order.astype(complex)))
        + sp.kron(eye_s, sp.csr_matrix(spatial.h.astype(complex)))
    ).tocsc()
    gram_vol = np.tile(spatial.gram_ht, n_s) * ds
    return CylinderProblem(
        slice=slc,
        fos=fos,
        metric=metric,
        beta=float(beta),
        n_s=n_s,
        ds=ds,
        kmat=kmat,
        gram_vol=gram_vol,
    )


def _line_selector(prob: CylinderProblem, line: int) -> sp.csr_matrix:
    n = prob.n
    line = line % prob.n_s
    cols = line * n + np.arange(n)
    return sp.csr_matrix(
        (np.ones(n), (np.arange(n), cols)), shape=(n, prob.dim)
    )


def _cylinder_trace(
    prob: CylinderProblem, line: int, side: str, orient: int
) -> sp.csr_matrix:
    """Trace matrix producing lapse-frame Cauchy data ``(u, orient*N^{-1}(u' - i w u))``.

    ``side`` selects the evaluation: ``"centered"`` uses the circle itself
    (for placing sources), ``"above"``/``"below"`` extrapolate value and
    s-derivative one-sidedly (quadratic accuracy).  The centered first
    difference flips circle parity, so a layer potential is carried by two
    smooth interleaved fields: the even circles hold the half-sum of the
    solutions with shift ``+w`` and ``-w``, the odd circles the half
    difference (zero when ``w = 0``).  Sampling across parities would read
    their O(1) interleaving as checkerboard noise; the one-sided traces
    therefore extrapolate each sublattice separately — even circles from
    ``2, 4, 6`` steps out, odd circles from ``1, 3, 5`` (a half-offset grid,
    hence the 15/8, -10/8, 3/8 weights) — and add the results, recovering
    the physical ``+w`` field.
    """
    sel = lambda off: _line_selector(prob, line + off)  # noqa: E731
    h2 = 2.0 * prob.ds  # sublattice spacing
    if side == "centered":
        value = sel(0)
        dval = (sel(+2) - sel(-2)) * (0.5 / h2)
    elif side == "above":
        value = (3.0 * sel(+2) - 3.0 * sel(+4) + sel(+6)) + (
            15.0 * sel(+1) - 10.0 * sel(+3) + 3.0 * sel(+5)
        ) * 0.125
        dval = (-5.0 * sel(+2) + 8.0 * sel(+4) - 3.0 * sel(+6)) * (0.5 / h2) + (
            -2.0 * sel(+1) + 3.0 * sel(+3) - sel(+5)
        ) * (1.0 / h2)
    elif side == "below":
        value = (3.0 * sel(-2) - 3.0 * sel(-4) + sel(-6)) + (
            15.0 * sel(-1) - 10.0 * sel(-3) + 3.0 * sel(-5)
        ) * 0.125
        dval = (5.0 * sel(-2) - 8.0 * sel(-4) + 3.0 * sel(-6)) * (0.5 / h2) + (
            2.0 * sel(-1) - 3.0 * sel(-3) + sel(-5)
        ) * (1.0 / h2)
    else:  # pragma: no cover - internal misuse
        raise ValueError(f"unknown trace side {side!r}")
    ninv = sp.diags(1.0 / prob.slice.lapse)
    w_op = sp.csr_matrix(prob.fos.spatial.w_op.astype(complex))
    deriv = (orient * ninv) @ (dval - 1j * (w_op @ value))
    return sp.vstack([value, deriv]).tocsr()


def _solve_columns(kmat: sp.csc_matrix, rhs: np.ndarray) -> np.ndarray:
    """Sparse LU solve with one step of iterative refinement."""
    try:
        lu = spla.splu(kmat)
        sol = lu.solve(rhs)
        residual = rhs - kmat @ sol
        sol = sol + lu.solve(residual)
    except RuntimeError as exc:
        raise SolveFailed(f"factorization of the rotated operator failed: {exc}")
    residual = rhs - kmat @ sol
    rel = np.linalg.norm(residual) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(rel) or rel > _REFINE_RTOL:
        raise SolveFailed(
            f"refined solve left a relative residual of {rel:.3e}"
        )
    return sol


def _adjoint_trace(
    trace: sp.csr_matrix, gram_vol: np.ndarray, gram_bdry: np.ndarray
) -> sp.csr_matrix:
    """Exact discrete adjoint ``G_vol^{-1} trace^H G_bdry``."""
    return (
        sp.diags(1.0 / gram_vol) @ trace.conj().T @ sp.diags(gram_bdry)
    ).tocsr()


def _normalize_jumps(
    fields: np.ndarray, gamma_plus, gamma_minus
) -> tuple[np.ndarray, float]:
    """Rescale layer densities so the potentials carry exact unit jumps.

    ``fields`` holds one potential per source column; the raw trace jump
    across the interface is measured and inverted, so the returned columns
    satisfy ``(gamma_plus - gamma_minus) @ out = -1`` exactly.  A solution of
    the homogeneous problem on either side of the interface is then
    reproduced by its own one-sided trace with a plus sign, which fixes the
    projector signs used by the callers.  The conditioning of the raw jump is
    returned; a near-singular jump means the source family does not span the
    layers (broken conventions, not a coarse grid) and raises
    :class:`JumpDefect`.
    """
    raw = (gamma_plus - gamma_minus) @ fields
    cond = float(np.linalg.cond(raw))
    if not np.isfinite(cond) or cond > _JUMP_COND_MAX:
        raise JumpDefect(
            f"raw trace jump of the layer sources is ill-conditioned ({cond:.3e}); "
            "the potentials do not span unit jumps"
        )
    correction = np.linalg.solve(raw, -np.eye(raw.shape[0], dtype=complex))
    return fields @ correction, cond


def calderon_elliptic(prob: CylinderProblem) -> tuple[CalderonPair, dict]:
    """Boundary projectors of the cylinder from jump-normalized potentials.

    Sources adjoint to the centered traces of both circles are solved once;
    the densities are then normalized to carry exact unit trace jumps
    (:func:`_normalize_jumps`), making the one-sided traces reproduce
    boundary data of strip solutions.  Returns a two-copy lapse-frame pair
    (copy ordering ``(s=0, s=beta/2)``) together with diagnostics; the
    complementarity defect is zero by construction, so idempotency carries
    the discretization error.
    """
    n = prob.n
    gram_h = prob.fos.spatial.gram_h
    gram_bdry = np.concatenate([gram_h, gram_h])

    half = prob.half_line
    centered0 = _cylinder_trace(prob, 0, "centered", -1)
    centeredh = _cylinder_trace(prob, half, "centered", +1)
    sources = np.zeros((prob.dim, 4 * n), dtype=complex)
    sources[:, : 2 * n] = _adjoint_trace(centered0, prob.gram_vol, gram_bdry).todense()
    sources[:, 2 * n :] = _adjoint_trace(centeredh, prob.gram_vol, gram_bdry).todense()

    fields = _solve_columns(prob.kmat, sources)

    gamma_plus = sp.vstack(
        [_cylinder_trace(prob, 0, "above", -1), _cylinder_trace(prob, half, "below", +1)]
    )
    gamma_minus = sp.vstack(
        [_cylinder_trace(prob, 0, "below", -1), _cylinder_trace(prob, half, "above", +1)]
    )
    fields, jump_cond = _normalize_jumps(fields, gamma_plus, gamma_minus)
    plus = -(gamma_plus @ fields)
    minus = gamma_minus @ fields
    pair = CalderonPair(
        plus=plus,
        minus=minus,
        frame="lapse",
        beta=prob.beta,
        copies=2,
        halves=n,
    )
    defects = pair.defects()
    defects["jump_condition"] = jump_cond
    return pair, defects


def elliptic_defect(prob: CylinderProblem, pair: CalderonPair | None = None) -> dict:
    """Errors of the elliptic pair against the spectral route (lapse frame)."""
    if pair is None:
        pair, _ = calderon_elliptic(prob)
    reference = spectral_pair(prob.fos, prob.beta)
    out = {"n_y": prob.n, "n_s": prob.n_s, "beta": prob.beta}
    for norm, tag in ((None, "error_fro"), (2, "error_op")):
        errs = []
        for got, want in ((pair.plus, reference.plus), (pair.minus, reference.minus)):
            scale = np.linalg.norm(want, norm)
            errs.append(np.linalg.norm(got - want, norm) / scale)
        out[tag] = float(max(errs))
    return out


# ---------------------------------------------------------------------------
# per-mode pencil identity


def cylinder_mode_operator(prob: CylinderProblem, k: int) -> np.ndarray:
    """Fourier-mode block of the assembled operator, read off honestly.

    The mode vector ``exp(i theta l) (x) e_j`` is pushed through ``kmat`` and
    the block is read from the ``l = 0`` circle, so the result reflects the
    assembled matrix, not a formula.
    """
    n = prob.n
    phase = np.exp(2j * math.pi * k * np.arange(prob.n_s) / prob.n_s)
    columns = np.kron(phase[:, None], np.eye(n, dtype=complex))
    return np.asarray((prob.kmat @ columns)[:n, :])


def cylinder_mode_defect(prob: CylinderProblem) -> float:
    """Max relative mismatch ``N K_k N`` vs. ``p(-i kappa_k)`` over all modes."""
    lapse = prob.slice.lapse
    worst = 0.0
    for k in range(prob.n_s):
        kappa = math.sin(2.0 * math.pi * k / prob.n_s) / prob.ds
        block = lapse[:, None] * cylinder_mode_operator(prob, k) * lapse[None, :]
        pencil = quadratic_pencil(prob.fos, -1j * kappa)
        worst = max(
            worst,
            float(np.linalg.norm(block - pencil) / np.linalg.norm(pencil)),
        )
    return worst


# ---------------------------------------------------------------------------
# disk extension


@dataclass(frozen=True, eq=False)
class WedgeFamilyFit:
    """Certified reflection-symmetric background ``N = kappa y + d y^3``,
    ``w = b y^3``, unit weight, even polynomial potential ``m(y^2)``."""

    kappa: float
    d_coef: float
    b_coef: float
    mass_coeffs: np.ndarray  # m(y^2) = c0 + c1 y^2 + c2 y^4
    residuals: dict

    @property
    def hawking_beta(self) -> float:
        return 2.0 * math.pi / self.kappa


def _poly_fit(nodes: np.ndarray, values: np.ndarray, powers: tuple) -> tuple:
    basis = np.stack([nodes**p for p in powers], axis=1)
    coeffs, *_ = np.linalg.lstsq(basis, values, rcond=None)
    residual = float(
        np.linalg.norm(basis @ coeffs - values)
        / max(np.linalg.norm(values), 1e-300)
    )
    return coeffs, residual


def fit_wedge_family(slc: LatticeSlice) -> WedgeFamilyFit:
    """Fit the slice to the extendable family, or raise :class:`ParityViolation`.

    The fit is certified within the polynomial family only: profiles outside
    it are rejected even when an extension might exist, which keeps the
    disk construction honest about its hypotheses.
    """
    nodes = slc.nodes
    bad = []
    if np.max(np.abs(slc.weight - 1.0)) > 1e-12:
        bad.append("weight (must be identically one)")
    lapse_coeffs, lapse_res = _poly_fit(nodes, slc.lapse, (1, 3))
    if lapse_res > _FIT_RTOL or lapse_coeffs[0] <= 0:
        bad.append(f"lapse (residual {lapse_res:.2e} off kappa*y + d*y^3)")
    shift_coeffs, shift_res = _poly_fit(nodes, slc.shift, (3,))
    if np.max(np.abs(slc.shift)) > 0 and shift_res > _FIT_RTOL:
        bad.append(f"shift (residual {shift_res:.2e} off b*y^3)")
    mass_coeffs, mass_res = _poly_fit(nodes, slc.potential, (0, 2, 4))
    if mass_res > _FIT_RTOL:
        bad.append(f"potential (residual {mass_res:.2e} off an even quartic)")
    if bad:
        raise ParityViolation(
            "slice does not extend across the axis; offending profiles: "
            + "; ".join(bad)
        )
    return WedgeFamilyFit(
        kappa=float(lapse_coeffs[0]),
        d_coef=float(lapse_coeffs[1]),
        b_coef=float(shift_coeffs[0]) if np.max(np.abs(slc.shift)) > 0 else 0.0,
        mass_coeffs=mass_coeffs,
        residuals={"lapse": lapse_res, "shift": shift_res, "potential": mass_res},
    )


def _disk_metric(
    x: np.ndarray, y: np.ndarray, fit: WedgeFamilyFit
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form complex disk metric ``(k_xx, k_yy, k_xy, sqrt(det))``.

    ``x`` runs along the two-wedge diameter, ``y`` across it.  The imaginary
    (shift) parts organize themselves so the determinant is real:

        det k = (1 + r^2 d / kappa)^2,   r^2 = x^2 + y^2.
    """
    r2 = x**2 + y**2
    b0 = fit.b_coef / fit.kappa
    dk = fit.d_coef / fit.kappa
    dd = 2.0 * dk + r2 * (fit.d_coef**2 - fit.b_coef**2) / fit.kappa**2
    k_xx = 1.0 + dd * y**2 - 2j * b0 * x * y
    k_yy = 1.0 + dd * x**2 + 2j * b0 * x * y
    k_xy = -dd * x * y + 1j * b0 * (x**2 - y**2)
    sq = 1.0 + r2 * dk
    return k_xx, k_yy, k_xy, sq


def _disk_coefficients(x, y, fit):
    """Divergence-form coefficients ``sqrt(det) k^{ab}`` of the disk operator."""
    k_xx, k_yy, k_xy, sq = _disk_metric(x, y, fit)
    return k_yy / sq, k_xx / sq, -k_xy / sq, sq


@dataclass(frozen=True, eq=False)
class DiskProblem:
    """Assembled disk operator with the two-wedge slice as its diameter.

    The grid staggers columns (``x = ±(j + 1/2) delta``, matching the slice
    nodes of both wedges) and centers rows (``y = l delta``), so the diameter
    is a grid row; nodes outside the radius are pinned to zero.  ``index``
    maps grid positions to unknowns (-1 outside).  ``m_upper``/``m_lower``
    are the sesquilinear forms of the two half disks; they sum to the full
    form ``diag(gram_vol) kmat`` exactly, and their diameter rows realize
    the discrete Green identity from which :func:`calderon_disk` reads
    one-sided fluxes.
    """

    slice: LatticeSlice
    fit: WedgeFamilyFit
    beta: float
    delta: float
    xs: np.ndarray
    ys: np.ndarray
    index: np.ndarray = field(repr=False)
    kmat: sp.csc_matrix = field(repr=False)
    gram_vol: np.ndarray = field(repr=False)
    m_upper: sp.csr_matrix = field(repr=False)
    m_lower: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.slice.n

    @property
    def dim(self) -> int:
        return self.kmat.shape[0]

    @property
    def axis_row(self) -> int:
        return self.n - 1


def _disk_weak_form(
    xs: np.ndarray,
    ys: np.ndarray,
    axis: int,
    delta: float,
    fit: WedgeFamilyFit,
    region: str,
) -> sp.csr_matrix:
    """Sesquilinear form of the disk operator over one half of the grid.

    ``region`` is ``"upper"`` (``y >= 0``) or ``"lower"`` (``y <= 0``).  The
    diameter row's tangential and mass terms carry weight one half (its dual
    cells are bisected by the diameter) and the cross-term y-difference
    there is one-sided into the region, so upper plus lower reproduces the
    standard full-grid assembly exactly.  Built on the full rectangle with
    zero ghosts; Dirichlet at the circle enters through the restriction to
    interior unknowns in :func:`extend_to_disk`.
    """
    rows = len(ys)
    cols = len(xs)
    size = rows * cols
    half = cols // 2

    def flat(l, i):
        return l * cols + i

    lidx = np.arange(rows)
    if region == "upper":
        row_w = np.where(lidx > axis, 1.0, 0.0)
        face_keep = np.arange(rows + 1) >= axis + 1
    elif region == "lower":
        row_w = np.where(lidx < axis, 1.0, 0.0)
        face_keep = np.arange(rows + 1) <= axis
    else:  # pragma: no cover - internal misuse
        raise ValueError(f"unknown region {region!r}")
    row_w[axis] = 0.5

    # x-face divergence form: sum_faces c_xx (u_right - u_left)^2
    fx_rows, fx_cols, fx_data = [], [], []
    for l in range(rows):
        for f in range(cols + 1):
            r = l * (cols + 1) + f
            if f < cols:
                fx_rows.append(r)
                fx_cols.append(flat(l, f))
                fx_data.append(1.0)
            if f - 1 >= 0:
                fx_rows.append(r)
                fx_cols.append(flat(l, f - 1))
                fx_data.append(-1.0)
    dfx = sp.csr_matrix(
        (fx_data, (fx_rows, fx_cols)), shape=(rows * (cols + 1), size)
    )
    fx_x = np.add.outer(np.zeros(rows), (np.arange(cols + 1) - half) * delta).ravel()
    fx_y = np.add.outer(ys, np.zeros(cols + 1)).ravel()
    cxx_f, _, _, _ = _disk_coefficients(fx_x, fx_y, fit)
    wx = np.repeat(row_w, cols + 1)

    # y-face form: each face lies wholly on one side of the diameter
    fy_rows, fy_cols, fy_data = [], [], []
    for g in range(rows + 1):
        for i in range(cols):
            r = g * cols + i
            if g < rows:
                fy_rows.append(r)
                fy_cols.append(flat(g, i))
                fy_data.append(1.0)
            if g - 1 >= 0:
                fy_rows.append(r)
                fy_cols.append(flat(g - 1, i))
                fy_data.append(-1.0)
    dfy = sp.csr_matrix(
        (fy_data, (fy_rows, fy_cols)), shape=((rows + 1) * cols, size)
    )
    fy_x = np.add.outer(np.zeros(rows + 1), xs).ravel()
    fy_y = np.add.outer(
        (np.arange(rows + 1) - half + 0.5) * delta, np.zeros(cols)
    ).ravel()
    _, cyy_f, _, _ = _disk_coefficients(fy_x, fy_y, fit)
    wy = np.repeat(face_keep.astype(float), cols)

    # node-centered differences for the cross term; the y-difference turns
    # one-sided on the diameter row so each half reads only its own field
    cx_rows, cx_cols, cx_data = [], [], []
    cy_rows, cy_cols, cy_data = [], [], []
    for l in range(rows):
        for i in range(cols):
            r = flat(l, i)
            if i + 1 < cols:
                cx_rows.append(r), cx_cols.append(flat(l, i + 1)), cx_data.append(0.5 / delta)
            if i - 1 >= 0:
                cx_rows.append(r), cx_cols.append(flat(l, i - 1)), cx_data.append(-0.5 / delta)
            if l == axis:
                up = l + 1 if region == "upper" else l
                dn = l if region == "upper" else l - 1
                cy_rows.append(r), cy_cols.append(flat(up, i)), cy_data.append(1.0 / delta)
                cy_rows.append(r), cy_cols.append(flat(dn, i)), cy_data.append(-1.0 / delta)
            else:
                if l + 1 < rows:
                    cy_rows.append(r), cy_cols.append(flat(l + 1, i)), cy_data.append(0.5 / delta)
                if l - 1 >= 0:
                    cy_rows.append(r), cy_cols.append(flat(l - 1, i)), cy_data.append(-0.5 / delta)
    dxc = sp.csr_matrix((cx_data, (cx_rows, cx_cols)), shape=(size, size))
    dyc = sp.csr_matrix((cy_data, (cy_rows, cy_cols)), shape=(size, size))
    xg, yg = np.meshgrid(xs, ys)
    _, _, cxy_n, sq_n = _disk_coefficients(xg.ravel(), yg.ravel(), fit)
    wn = np.repeat(row_w, cols)
    cross_w = sp.diags(cxy_n * delta**2 * wn)

    r2 = (xg**2 + yg**2).ravel()
    mass = (
        fit.mass_coeffs[0] + fit.mass_coeffs[1] * r2 + fit.mass_coeffs[2] * r2**2
    )

    return (
        dfx.conj().T @ sp.diags(cxx_f * wx) @ dfx
        + dfy.conj().T @ sp.diags(cyy_f * wy) @ dfy
        + dxc.T @ cross_w @ dyc
        + dyc.T @ cross_w @ dxc
        + sp.diags(mass * sq_n * delta**2 * wn)
    ).tocsr()


def extend_to_disk(slc: LatticeSlice, beta: float) -> DiskProblem:
    """Fill the rotated cylinder in across its axis.

    Only consistent at the geometry's own inverse temperature: anything but
    ``beta = 2 pi / kappa`` (to relative precision ``1e-15``) leaves a cone
    point at the axis and raises :class:`WrongTemperature`.
    """
    fit = fit_wedge_family(slc)
    target = fit.hawking_beta
    if abs(beta - target) > _TEMP_RTOL * target:
        raise WrongTemperature(
            f"disk extension is smooth only at beta = 2 pi / kappa = {target!r};"
            f" got beta = {beta!r}"
        )
    n = slc.n
    delta = slc.dy
    length = slc.length
    xs = (np.arange(2 * n) - n + 0.5) * delta
    ys = (np.arange(2 * n - 1) - (n - 1)) * delta
    xg, yg = np.meshgrid(xs, ys)  # shape (rows, cols) = (2n-1, 2n)
    interior = xg**2 + yg**2 < length**2 * (1.0 - 1e-12)
    index = -np.ones(interior.shape, dtype=int)
    index[interior] = np.arange(int(interior.sum()))

    axis = n - 1
    m_up_full = _disk_weak_form(xs, ys, axis, delta, fit, "upper")
    m_dn_full = _disk_weak_form(xs, ys, axis, delta, fit, "lower")
    mfull = (m_up_full + m_dn_full).tocsr()

    keep_idx = np.nonzero(index.ravel() >= 0)[0]
    mret = mfull[keep_idx][:, keep_idx]
    m_upper = m_up_full[keep_idx][:, keep_idx].tocsr()
    m_lower = m_dn_full[keep_idx][:, keep_idx].tocsr()
    _, _, _, sq_n = _disk_coefficients(xg.ravel(), yg.ravel(), fit)
    gram_vol = (sq_n * delta**2)[keep_idx]
    kmat = (sp.diags(1.0 / gram_vol) @ mret).tocsc()
    return DiskProblem(
        slice=slc,
        fit=fit,
        beta=float(beta),
        delta=delta,
        xs=xs,
        ys=ys,
        index=index,
        kmat=kmat,
        gram_vol=gram_vol,
        m_upper=m_upper,
        m_lower=m_lower,
    )


def _one_sided_flux(prob: DiskProblem, side: str) -> np.ndarray:
    """Diameter flux map of one half disk (a discrete Dirichlet-to-Neumann map).

    For Dirichlet data ``g`` on the diameter, solve the half-disk problem on
    the ``side`` interior and read the conormal flux back through the
    half-domain sesquilinear form itself: with ``u`` the solution extended by
    ``g``, the flux is ``±(M_side u)|_diameter / delta``.  This is the exact
    lattice object — the discrete Green identity holds with no remainder —
    so no one-sided stencils enter.  Orientation follows the cylinder trace
    convention: the conormal uses the global upward normal for both sides.
    """
    idx = prob.index
    axis = prob.axis_row
    bnd = idx[axis, :]
    rows_grid, cols_grid = idx.shape
    row_of = np.repeat(np.arange(rows_grid), cols_grid)[idx.ravel() >= 0]
    if side == "above":
        form = prob.m_upper
        inner = np.nonzero(row_of > axis)[0]
        orient = 1.0
    elif side == "below":
        form = prob.m_lower
        inner = np.nonzero(row_of < axis)[0]
        orient = -1.0
    else:  # pragma: no cover - internal misuse
        raise ValueError(f"unknown flux side {side!r}")
    a_ii = form[inner][:, inner].tocsc()
    a_ib = form[inner][:, bnd].toarray()
    try:
        lu = spla.splu(a_ii)
    except RuntimeError as exc:
        raise SolveFailed(f"half-disk form is singular: {exc}") from exc
    m = len(bnd)
    fields = np.zeros((prob.dim, m), dtype=complex)
    fields[bnd] = np.eye(m)
    fields[inner] = -lu.solve(a_ib.astype(complex))
    return orient * np.asarray((form[bnd] @ fields)) / prob.delta


def _wedge_permutation(n: int) -> np.ndarray:
    """Map diameter data (x-ascending) to two-wedge copy layout.

    Copy one is the right wedge (``x = +y_j``), copy two the left wedge
    ordered by distance from the axis; each copy carries ``(value, deriv)``
    components of size ``n``.
    """
    m = 2 * n
    perm = np.zeros((2 * m, 2 * m))
    for j in range(n):
        perm[j, n + j] = 1.0  # copy-1 value
        perm[n + j, m + n + j] = 1.0  # copy-1 deriv
        perm[m + j, n - 1 - j] = 1.0  # copy-2 value
        perm[m + n + j, m + n - 1 - j] = 1.0  # copy-2 deriv
    return perm


def calderon_disk(prob: DiskProblem) -> tuple[np.ndarray, np.ndarray, dict]:
    """One-sided boundary projectors of the disk across its diameter.

    Cauchy data ``(g, h)`` on the diameter splits uniquely along the graphs
    of the two one-sided solution operators: ``h = Lambda^+ g_+ + Lambda^- g_-``
    with ``g = g_+ + g_-`` determines ``g_±`` through the flux gap
    ``T = Lambda^+ - Lambda^-``, and ``c^±`` maps ``(g, h)`` to the Cauchy
    data of the piece that extends to its side.  Complementarity and
    idempotency are exact by construction; the health number is the
    conditioning of the gap (the graphs must be transversal).  Returns
    ``(c_plus, c_minus, diagnostics)`` in the two-wedge copy layout of
    :func:`_wedge_permutation` (lapse-frame physical data).
    """
    n = prob.n
    m = 2 * n
    lam_above = _one_sided_flux(prob, "above")
    lam_below = _one_sided_flux(prob, "below")
    gap = lam_above - lam_below
    cond = float(np.linalg.cond(gap))
    if not np.isfinite(cond) or cond > _JUMP_COND_MAX:
        raise JumpDefect(
            "one-sided solution graphs are nearly tangent"
            f" (flux-gap condition {cond:.3e}); cannot split Cauchy data"
        )
    gap_inv = np.linalg.solve(gap, np.eye(m, dtype=complex))
    split_up = np.linalg.solve(gap, lam_below)
    split_dn = np.linalg.solve(gap, lam_above)
    plus = np.block(
        [[-split_up, gap_inv], [-lam_above @ split_up, lam_above @ gap_inv]]
    )
    minus = np.block(
        [[split_dn, -gap_inv], [lam_below @ split_dn, -lam_below @ gap_inv]]
    )
    perm = _wedge_permutation(n)
    plus = perm @ plus @ perm.T
    minus = perm @ minus @ perm.T
    diagnostics = {
        "idempotent_plus": float(np.linalg.norm(plus @ plus - plus, 2)),
        "idempotent_minus": float(np.linalg.norm(minus @ minus - minus, 2)),
        "complementarity": float(
            np.linalg.norm(plus + minus - np.eye(2 * m), 2)
        ),
        "jump_condition": cond,
    }
    return plus, minus, diagnostics


def harmonic_snapshot(prob: DiskProblem, data: np.ndarray) -> np.ndarray:
    """Solve both half disks for diameter Dirichlet ``data``; plot-ready rows.

    ``data`` is ordered x-ascending (length ``2 n``).  Returns one row
    ``(x, y, Re u, Im u)`` per interior node; the diameter row carries the
    data itself, so the snapshot shows the glued field whose flux mismatch
    :func:`calderon_disk` splits.
    """
    data = np.asarray(data, dtype=complex)
    if data.shape != (2 * prob.n,):
        raise ValueError(f"diameter data must have length {2 * prob.n}")
    idx = prob.index
    axis = prob.axis_row
    bnd = idx[axis, :]
    rows_grid, cols_grid = idx.shape
    row_of = np.repeat(np.arange(rows_grid), cols_grid)[idx.ravel() >= 0]
    u = np.zeros(prob.dim, dtype=complex)
    u[bnd] = data
    for form, inner in (
        (prob.m_upper, np.nonzero(row_of > axis)[0]),
        (prob.m_lower, np.nonzero(row_of < axis)[0]),
    ):
        a_ii = form[inner][:, inner].tocsc()
        rhs = form[inner][:, bnd] @ data
        try:
            u[inner] = -spla.splu(a_ii).solve(rhs)
        except RuntimeError as exc:
            raise SolveFailed(f"half-disk form is singular: {exc}") from exc
    xg, yg = np.meshgrid(prob.xs, prob.ys)
    keep = idx.ravel() >= 0
    return np.column_stack(
        [xg.ravel()[keep], yg.ravel()[keep], u.real, u.imag]
    )


def _glued_charge(n: int, delta: float) -> np.ndarray:
    gmat = delta * np.eye(n)
    zero = np.zeros((n, n))
    block = np.block([[zero, gmat], [gmat, zero]])
    out = np.zeros((4 * n, 4 * n))
    out[: 2 * n, : 2 * n] = block
    out[2 * n :, 2 * n :] = block
    return out.astype(complex)


def hhi_covariances(slc: LatticeSlice, beta: float) -> tuple[CovariancePair, dict]:
    """Glued two-wedge state from the disk route.

    The two-point forms are ``lambda^± = ± q c^±`` with ``q`` the glued
    charge form (both wedges positively oriented) and ``c^±`` the disk
    projectors across the diameter.
    """
    prob = extend_to_disk(slc, beta)
    plus, minus, diagnostics = calderon_disk(prob)
    charge = _glued_charge(prob.n, prob.delta)
    pair = CovariancePair(
        lam_plus=charge @ plus,
        lam_minus=-charge @ minus,
        charge=charge,
        frame="lapse",
        beta=beta,
        copies=2,
        halves=prob.n,
        label="hhi",
    )
    return pair, diagnostics


def doubled_reference(slc: LatticeSlice, beta: float) -> CovariancePair:
    """Wedge-doubled spectral state in the same layout as the disk route."""
    fos = lapse_reduce(assemble_spatial(slc))
    doubled = double_kms_covariances(fos, beta, frame="lapse")
    reflection = WedgeReflection.for_slice(slc)
    return wedge_double(doubled, reflection)


def gluing_error(
    got: CovariancePair,
    want: CovariancePair,
    offset_axis: int,
    offset_wall: int,
) -> float:
    """Relative error between glued states on smooth interior-supported data.

    The comparison sweeps a family of smooth window-bump probes supported at
    least ``offset_axis`` nodes from the axis and ``offset_wall`` nodes from
    the outer wall, applied to every component block and to an oscillatory
    cross-copy combination, and returns the worst relative error
    ``|(a - b) f| / |b f|`` over probes and both covariances.

    Smoothness of the probes is essential, not cosmetic: two independent
    consistent discretizations of the same state keep different same-node
    lattice constants at any resolution (coincidence limits of a two-point
    function are regularization-dependent), so entrywise or delta-data
    comparison stalls at an O(1) floor.  Smeared against fixed smooth data
    the states do converge to each other.  The offsets matter because the
    axis is where the disk chart resolves the wedges most coarsely and the
    outer Dirichlet wall is a desk-model artifact both routes share only
    approximately.
    """
    if got.dim != want.dim or got.halves != want.halves:
        raise ValueError("glued states have mismatched layouts")
    n = got.halves
    lo = (offset_axis + 0.5) / n
    hi = (n - offset_wall - 0.5) / n
    if hi <= lo:
        raise ValueError("support offsets leave no nodes to compare")
    y = (np.arange(n) + 0.5) / n
    window = np.where(
        (y > lo) & (y < hi),
        ((y - lo) * (hi - y)) ** 2 / ((hi - lo) / 2.0) ** 4,
        0.0,
    )
    if not np.any(window > 0.0):
        # the interval is nonempty but holds no lattice node
        raise ValueError("support offsets leave no nodes to compare")
    centers = np.linspace(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), 3)
    sigma = 0.22 * (hi - lo)
    probes = []
    for c in centers:
        bump = window * np.exp(-0.5 * ((y - c) / sigma) ** 2)
        for block in range(4):
            f = np.zeros(4 * n, dtype=complex)
            f[block * n : (block + 1) * n] = bump
            probes.append(f)
        f = np.zeros(4 * n, dtype=complex)
        f[:n] = bump * np.exp(2j * np.pi * y)
        f[2 * n : 3 * n] = bump * np.exp(-2j * np.pi * y)
        probes.append(f)
    worst = 0.0
    for a, b in ((got.lam_plus, want.lam_plus), (got.lam_minus, want.lam_minus)):
        for f in probes:
            ref = np.linalg.norm(b @ f)
            worst = max(worst, float(np.linalg.norm((a - b) @ f) / ref))
    return float(worst)


# ---------------------------------------------------------------------------
# covariant divergence identity


@dataclass(frozen=True)
class DivergenceReport:
    """Agreement of two discretizations of the covariant divergence."""

    spacings: tuple
    defects: tuple
    orders: tuple


def divergence_identity_check(
    kappa: float = 1.0,
    d_coef: float = 0.3,
    b_coef: float = 0.2,
    length: float = 1.0,
    resolutions: tuple = (24, 48, 96),
) -> DivergenceReport:
    """Divergence of a smooth vector field, two ways, on the closed-form metric.

    Route one contracts Christoffel symbols, ``d_a T^a + (1/2) tr(k^{-1}
    d_b k) T^b``, with the metric derivative taken by centered differences;
    route two differentiates the density, ``det^{-1/2} d_a (det^{1/2} T^a)``.
    Both are second-order discretizations of the same continuum object, so
    their mismatch must shrink at second order — a sharp consistency test of
    the metric's closed form (and trivially zero for a flat background, so
    the defaults bend it).
    """
    fit = WedgeFamilyFit(
        kappa=kappa,
        d_coef=d_coef,
        b_coef=b_coef,
        mass_coeffs=np.zeros(3),
        residuals={},
    )
    half = 0.7 * length
    defects = []
    spacings = []
    for cells in resolutions:
        delta = 2.0 * half / cells
        xs = np.linspace(-half, half, cells + 1)
        xg, yg = np.meshgrid(xs, xs)
        tx = np.sin(1.7 * xg / length) * np.cos(1.1 * yg / length + 0.3)
        ty = np.cos(1.3 * xg / length) * np.sin(0.9 * yg / length - 0.2)
        k_xx, k_yy, k_xy, sq = _disk_metric(xg, yg, fit)

        def ddx(f):
            out = np.full_like(f, np.nan, dtype=complex)
            out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * delta)
            return out

        def ddy(f):
            out = np.full_like(f, np.nan, dtype=complex)
            out[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2.0 * delta)
            return out

        det = sq**2
        # tr(k^{-1} d_b k) = (k_yy d_b k_xx - 2 k_xy d_b k_xy + k_xx d_b k_yy) / det
        def trace_term(db):
            return (
                k_yy * db(k_xx) - 2.0 * k_xy * db(k_xy) + k_xx * db(k_yy)
            ) / det

        route1 = (
            ddx(tx)
            + ddy(ty)
            + 0.5 * trace_term(ddx) * tx
            + 0.5 * trace_term(ddy) * ty
        )
        route2 = (ddx(sq * tx) + ddy(sq * ty)) / sq
        mismatch = np.abs(route1 - route2)[1:-1, 1:-1]
        defects.append(float(np.nanmax(mismatch)))
        spacings.append(delta)
    def observed_order(i):
        if defects[i + 1] == 0.0:  # both routes coincide identically
            return math.inf
        return float(math.log2(defects[i] / defects[i + 1])) / float(
            math.log2(spacings[i] / spacings[i + 1])
        )

    orders = tuple(observed_order(i) for i in range(len(defects) - 1))
    return DivergenceReport(
        spacings=tuple(spacings), defects=tuple(defects), orders=orders
    )
