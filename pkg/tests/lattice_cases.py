"""Shared model builders for the test suite."""

import numpy as np

from hhi_forge.model import (
    FirstOrderSystem,
    LatticeSlice,
    assemble_spatial,
    lapse_reduce,
    wedge_slice,
)


def mode_system(omega: float) -> FirstOrderSystem:
    """Single-mode system with h0~ = [[omega^2]], no shift, unit Gram."""
    return FirstOrderSystem.from_tilde_operators(np.array([[omega**2]], dtype=complex))


def random_slice(rng, n=None, with_shift=True, lapse_kind="generic") -> LatticeSlice:
    """A random well-posed slice (uniformly timelike with comfortable margin)."""
    if n is None:
        n = int(rng.integers(3, 9))
    length = float(rng.uniform(0.8, 2.0))
    nodes = (np.arange(n) + 0.5) * (length / n)
    if lapse_kind == "horizon":
        kappa = float(rng.uniform(0.5, 2.0))
        lapse = kappa * nodes
    else:
        lapse = rng.uniform(0.6, 1.4) + rng.uniform(0.1, 0.5) * nodes / length
    weight = rng.uniform(0.7, 1.3) + 0.2 * np.cos(np.pi * nodes / length)
    potential = rng.uniform(0.6, 2.0) + 0.3 * nodes**2
    if with_shift:
        margin = 0.25 * np.min(lapse / weight)
        shift = margin * np.sin(np.pi * nodes / length)
    else:
        shift = np.zeros(n)
    return LatticeSlice(
        n=n,
        length=length,
        lapse=lapse,
        shift=shift,
        weight=weight,
        potential=potential,
    )


def random_system(rng, n=None, with_shift=True, lapse_kind="generic") -> FirstOrderSystem:
    return lapse_reduce(assemble_spatial(random_slice(rng, n, with_shift, lapse_kind)))


def random_mild_system(rng, n=None) -> FirstOrderSystem:
    """Random abstract system with generator spectrum pinned near ±1.

    Used where an operator exponential is formed explicitly, so that
    ``beta * spectral_radius`` stays small and the identity under test is not
    drowned in conditioning noise.
    """
    if n is None:
        n = int(rng.integers(2, 9))
    basis = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))[0]
    form = basis @ np.diag(rng.uniform(0.5, 2.0, size=n)) @ basis.conj().T
    form = 0.5 * (form + form.conj().T)
    gram_ht = rng.uniform(0.5, 2.0, size=n)
    # gram @ h0t Hermitian by construction: h0t is self-adjoint in this Gram
    h0t = form / gram_ht[:, None]
    wt = 0.2 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
    return FirstOrderSystem.from_tilde_operators(h0t, wt=wt, gram_ht=gram_ht)


def horizon_slice(n, length=1.0, kappa=1.0, eps=0.0, m0=1.0) -> LatticeSlice:
    """The boost-wedge model family (re-exported for older tests)."""
    return wedge_slice(n, length=length, kappa=kappa, eps=eps, m0=m0)
