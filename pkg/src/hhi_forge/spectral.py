"""Spectral functional calculus for operators self-adjoint in a custom Gram.

The whole laboratory rests on one primitive: an operator ``b`` acting on
``C^dim`` that is self-adjoint with respect to a Hermitian positive definite
Gram matrix ``M`` (i.e. ``M b`` is Hermitian).  Such a pair is reduced to an
ordinary Hermitian eigenproblem through the Cholesky factor ``M = L L^H``:

    B = L^H b L^{-H}   is Hermitian,   b = L^{-H} B L^H,

so ``eigh`` applies and eigenvectors pulled back through ``L^{-H}`` are
``M``-orthonormal.  A generalized eigensolver is never called on raw pairs.

Spectral projections are grouped by eigenvalue clusters (relative gap below
``1e-12 * max|eig|``) so that functional calculus ``f(b) = sum f(l_i) P_i``
remains well conditioned under near degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    DegenerateGram,
    FunctionSingularAtEigenvalue,
    KernelViolation,
    NotSelfAdjoint,
)

_SELF_ADJOINT_RTOL = 1e-12
_KERNEL_RTOL = 1e-12
_CLUSTER_RTOL = 1e-12


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class GramSpace:
    """A finite-dimensional complex vector space with an explicit Gram matrix.

    Parameters
    ----------
    gram:
        Hermitian positive definite matrix of the scalar product
        ``(u, v) = u^H gram v``.

    Raises
    ------
    DegenerateGram
        If ``gram`` is not Hermitian to 1e-12 (relative) or its Cholesky
        factorization fails.
    """

    gram: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        g = _as_square(self.gram, "gram")
        g = np.asarray(g, dtype=complex)
        hdefect = np.linalg.norm(g - g.conj().T)
        if hdefect > _SELF_ADJOINT_RTOL * max(np.linalg.norm(g), 1e-300):
            raise DegenerateGram(
                f"gram is not Hermitian (relative defect {hdefect:.3e})"
            )
        g = 0.5 * (g + g.conj().T)
        try:
            low = sla.cholesky(g, lower=True)
        except sla.LinAlgError as exc:
            raise DegenerateGram(f"gram is not positive definite: {exc}") from exc
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "chol", low)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        """Scalar product ``u^H gram v`` (antilinear in the first slot)."""
        return complex(np.conj(u) @ self.gram @ v)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u).real, 0.0)))

    def adjoint(self, a: np.ndarray) -> np.ndarray:
        """Adjoint ``gram^{-1} a^H gram`` of an operator in this Gram."""
        a = _as_square(a, "operator")
        # gram = L L^H, so gram^{-1} x = L^{-H} (L^{-1} x)
        rhs = a.conj().T @ self.gram
        return sla.cho_solve((self.chol, True), rhs)

    def opnorm(self, a: np.ndarray) -> float:
        """Operator norm of ``a`` as a map of this space to itself.

        Equals the largest singular value of ``L^H a L^{-H}``.
        """
        a = _as_square(a, "operator")
        reduced = self.chol.conj().T @ sla.solve_triangular(
            self.chol.conj().T, a.T, lower=False, trans="T"
        ).T
        return float(np.linalg.norm(reduced, 2))


def std_space(dim: int) -> GramSpace:
    """Euclidean ``C^dim`` (identity Gram)."""
    return GramSpace(np.eye(dim))


@dataclass(frozen=True, eq=False)
class SpectralSystem:
    """Eigenvalue clusters and spectral projections of a Gram-self-adjoint operator.

    Attributes
    ----------
    space:
        The :class:`GramSpace` the operator is self-adjoint on.
    op:
        The operator matrix itself.
    eigenvalues:
        Real cluster representatives, strictly ascending.
    projections:
        Spectral projections ``P_i`` (idempotent, Gram-self-adjoint), one per
        cluster, with ``sum P_i = 1`` and ``sum l_i P_i = op``.
    vectors:
        Gram-orthonormal eigenvector basis ``V`` (columns), aligned with
        ``raw_eigenvalues``.
    raw_eigenvalues:
        The unclustered eigenvalue list (one per basis column).
    """

    space: GramSpace
    op: np.ndarray
    eigenvalues: np.ndarray
    projections: tuple
    vectors: np.ndarray
    raw_eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.space.dim

    def function(self, f: Callable[[float], complex]) -> np.ndarray:
        return apply_function(self, f)

    def sign(self) -> np.ndarray:
        """``sgn(op)`` by functional calculus."""
        return apply_function(self, lambda x: float(np.sign(x)))

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        """Expansion coefficients of ``x`` in the eigenbasis: ``V^H gram x``."""
        return self.vectors.conj().T @ (self.space.gram @ x)


def gram_eigendecompose(space: GramSpace, op: np.ndarray) -> SpectralSystem:
    """Diagonalize an operator that is self-adjoint w.r.t. ``space.gram``.

    Parameters
    ----------
    space:
        Gram space carrying the scalar product.
    op:
        Matrix with ``gram @ op`` Hermitian (relative defect <= 1e-12).

    Returns
    -------
    SpectralSystem
        Clustered eigenvalues and Gram-self-adjoint spectral projections,
        reconstructing ``op`` to 1e-12 relative accuracy.

    Raises
    ------
    NotSelfAdjoint
        If ``gram @ op`` fails the Hermiticity test.
    KernelViolation
        If ``min|eig| <= 1e-12 * max|eig|`` — the calculus downstream divides
        by eigenvalues and takes their sign, so a numerical kernel is refused.
    """
    op = _as_square(op, "op")
    form = space.gram @ op
    defect = np.linalg.norm(form - form.conj().T)
    scale = np.linalg.norm(form)
    if defect > _SELF_ADJOINT_RTOL * max(scale, 1e-300):
        raise NotSelfAdjoint(
            f"gram @ op not Hermitian (relative defect {defect / max(scale, 1e-300):.3e})"
        )
    low = space.chol
    # B = L^H op L^{-H}; solve_triangular works on the right factor via transposes.
    tmp = sla.solve_triangular(low, (low.conj().T @ op).conj().T, lower=True)
    reduced = tmp.conj().T
    reduced = 0.5 * (reduced + reduced.conj().T)
    eigvals, eigvecs = sla.eigh(reduced)
    vectors = sla.solve_triangular(low.conj().T, eigvecs, lower=False)

    top = float(np.max(np.abs(eigvals))) if eigvals.size else 0.0
    if top == 0.0 or float(np.min(np.abs(eigvals))) <= _KERNEL_RTOL * top:
        raise KernelViolation(
            "operator has eigenvalues at numerical zero "
            f"(min |eig| = {float(np.min(np.abs(eigvals))):.3e}, max = {top:.3e})"
        )

    clusters: list[list[int]] = [[0]]
    for i in range(1, eigvals.size):
        if eigvals[i] - eigvals[i - 1] <= _CLUSTER_RTOL * top:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    projections = []
    reps = np.empty(len(clusters))
    for c, idx in enumerate(clusters):
        block = vectors[:, idx]
        projections.append(block @ block.conj().T @ space.gram)
        reps[c] = float(np.mean(eigvals[idx]))

    return SpectralSystem(
        space=space,
        op=np.asarray(op, dtype=complex),
        eigenvalues=reps,
        projections=tuple(projections),
        vectors=vectors,
        raw_eigenvalues=eigvals,
    )


def apply_function(system: SpectralSystem, f: Callable[[float], complex]) -> np.ndarray:
    """Functional calculus ``f(op) = sum_i f(l_i) P_i``.

    Raises
    ------
    FunctionSingularAtEigenvalue
        If ``f`` returns a non-finite value at any cluster eigenvalue.
    """
    out = np.zeros((system.dim, system.dim), dtype=complex)
    for lam, proj in zip(system.eigenvalues, system.projections):
        try:
            val = complex(f(float(lam)))
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise FunctionSingularAtEigenvalue(f"f({lam!r}) raised {exc!r}") from exc
        if not np.isfinite(val):
            raise FunctionSingularAtEigenvalue(f"f({lam!r}) evaluated to {val!r}")
        out += val * proj
    return out


def positive_projector(system: SpectralSystem) -> np.ndarray:
    """Spectral projection onto the positive part of the spectrum."""
    return apply_function(system, lambda x: 1.0 if x > 0 else 0.0)


def negative_projector(system: SpectralSystem) -> np.ndarray:
    return apply_function(system, lambda x: 1.0 if x < 0 else 0.0)


def gen_eig_range(space: GramSpace, num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Extreme generalized eigenvalues of the form pair ``(num, den)``.

    ``num`` and ``den`` are *form* matrices (``gram @ operator``), ``den``
    Hermitian positive definite.  Reduction is via Cholesky of ``den``; the
    result brackets ``c1 <= num/den <= c2``.
    """
    den = 0.5 * (den + den.conj().T)
    try:
        low = sla.cholesky(den, lower=True)
    except sla.LinAlgError as exc:
        raise DegenerateGram(f"denominator form not positive definite: {exc}") from exc
    tmp = sla.solve_triangular(low, np.asarray(num, dtype=complex), lower=True)
    reduced = sla.solve_triangular(low, tmp.conj().T, lower=True).conj().T
    reduced = 0.5 * (reduced + reduced.conj().T)
    vals = sla.eigvalsh(reduced)
    return float(vals[0]), float(vals[-1])
