"""Acceptance gates: the ten project-level pass/fail criteria in one place.

Each test prints one ``ACCEPTANCE <n>: PASS/FAIL`` line (run with ``-s`` to
see them live) and enforces its runtime budget.  Everything here is checked
against independent oracles or between the two construction routes; nothing
is compared against its own implementation.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from hhi_forge import (
    GreenKernel,
    araki_woods_oracle,
    assemble_cylinder,
    assemble_spatial,
    aw_covariance_matrices,
    calderon_thermal,
    check_purity,
    cylinder_mode_defect,
    divergence_identity_check,
    double_kms_covariances,
    doubled_reference,
    elliptic_defect,
    gluing_error,
    green_eval,
    green_jump_defect,
    hhi_covariances,
    kms_covariances,
    kms_detailed_balance,
    lapse_reduce,
    resolvent,
    to_lapse,
    to_tilde,
    vacuum_covariances,
    validate_state,
    wedge_double,
    wedge_slice,
    WedgeReflection,
)
from lattice_cases import mode_system, random_mild_system, random_system

REPO = Path(__file__).resolve().parent.parent

F1 = 1.5819767068693265            # (1 - e^{-1})^{-1}
PURITY_MIXED = 0.9206735942077923  # F1 * (F1 - 1): scalar idempotency defect


def _verdict(num: int, ok: bool) -> None:
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'}")
    assert ok


def test_acceptance_01_spectral_projector_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for beta in (0.5, 1.0, 2.0 * math.pi):
        for n in (None, None, 16):  # n = 16 reaches the dim-64 ceiling
            fos = random_system(rng, n=n)
            pair = calderon_thermal(fos.system, beta)
            assert pair.dim <= 64
            for framed in (pair, to_tilde(pair), to_lapse(to_tilde(pair), fos)):
                worst = max(worst, max(framed.defects().values()))
    elapsed = time.perf_counter() - t0
    _verdict(1, worst <= 1e-10 and elapsed < 5.0)


def test_acceptance_02_state_axioms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    ok = True

    def axes(pair):
        rep = validate_state(pair)
        rel_eig = min(
            rep.min_eig_plus / max(rep.norm_plus, 1e-30),
            rep.min_eig_minus / max(rep.norm_minus, 1e-30),
        )
        return rel_eig >= -1e-10 and rep.ccr_defect <= 1e-10

    slc = wedge_slice(16, eps=0.3)
    fos = lapse_reduce(assemble_spatial(slc))
    doubled = double_kms_covariances(fos, 1.3)
    glued = wedge_double(doubled, WedgeReflection.for_slice(slc))
    for pair, pure in (
        (vacuum_covariances(fos), True),
        (vacuum_covariances(random_system(rng)), True),
        (kms_covariances(random_system(rng), 0.7), False),
        (doubled, True),
        (double_kms_covariances(random_system(rng), 0.5, frame="tilde"), True),
        (glued, True),
    ):
        ok = ok and axes(pair)
        if pure:
            ok = ok and check_purity(pair).purity_defect <= 1e-10

    # frozen scalar oracle: single mode omega = 1 at beta = 1
    rep = check_purity(kms_covariances(mode_system(1.0), beta=1.0))
    ok = ok and rep.purity_defect > 0.1
    ok = ok and abs(rep.purity_defect - PURITY_MIXED) <= 1e-3
    elapsed = time.perf_counter() - t0
    _verdict(2, ok and elapsed < 5.0)


def test_acceptance_03_detailed_balance():
    rng = np.random.default_rng(103)
    worst = 0.0
    for draw in range(20):
        fos = random_mild_system(rng)
        beta = (0.5, 1.0, 2.0)[draw % 3]
        worst = max(worst, kms_detailed_balance(fos, beta))
    _verdict(3, worst <= 1e-10)


def test_acceptance_04_araki_woods_equivalence():
    rng = np.random.default_rng(104)
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        for n in (2, 3, 4):  # doubled dimension 4 n <= 16
            fos = random_system(rng, n=n)
            lam_plus, lam_minus = aw_covariance_matrices(
                araki_woods_oracle(fos, beta)
            )
            dbl = double_kms_covariances(fos, beta, frame="tilde")
            scale = np.linalg.norm(dbl.lam_plus, 2)
            worst = max(
                worst,
                float(np.max(np.abs(lam_plus - dbl.lam_plus))) / scale,
                float(np.max(np.abs(lam_minus - dbl.lam_minus))) / scale,
            )
    _verdict(4, worst <= 1e-10)


def test_acceptance_05_resolvent_and_pencil():
    rng = np.random.default_rng(105)
    fos = random_system(rng, n=6)
    eye = np.eye(2 * fos.n)
    worst = 0.0
    for _ in range(5):
        z = complex(
            rng.uniform(-2.0, 2.0),
            rng.uniform(0.3, 1.5) * rng.choice([-1.0, 1.0]),
        )
        defect = np.linalg.norm((fos.hmat - z * eye) @ resolvent(fos, z) - eye, 2)
        worst = max(worst, float(defect))
    prob = assemble_cylinder(wedge_slice(8), 1.0, 64)
    mode = cylinder_mode_defect(prob)
    _verdict(5, worst <= 1e-10 and mode <= 1e-10)


def test_acceptance_06_elliptic_vs_spectral_calderon():
    t0 = time.perf_counter()
    slc = wedge_slice(8)  # shift-free toy
    beta = 1.0
    levels = (64, 128, 256)
    errors = [
        elliptic_defect(assemble_cylinder(slc, beta, n_s))["error_op"]
        for n_s in levels
    ]
    fit = np.polyfit(
        np.log([beta / n_s for n_s in levels]), np.log(errors), 1
    )
    order = float(fit[0])
    elapsed = time.perf_counter() - t0
    _verdict(6, errors[-1] <= 5e-2 and order >= 1.0 - 0.3 and elapsed < 120.0)


def test_acceptance_07_hhi_gluing():
    t0 = time.perf_counter()
    beta = 2.0 * math.pi  # Hawking value at kappa = 1
    errors = []
    for n in (32, 64):
        slc = wedge_slice(n)  # flat toy horizon: N = y, w = 0
        pair, _ = hhi_covariances(slc, beta)
        reference = doubled_reference(slc, beta)
        errors.append(gluing_error(pair, reference, 3, n // 2))
    # diameter of the coarse disk already carries >= 64 boundary nodes
    assert 2 * 32 >= 64
    elapsed = time.perf_counter() - t0
    _verdict(
        7, errors[-1] <= 5e-2 and errors[-1] < errors[0] and elapsed < 300.0
    )


def test_acceptance_08_divergence_identity():
    rng = np.random.default_rng(108)
    ok = True
    for _ in range(4):
        report = divergence_identity_check(
            kappa=float(rng.uniform(0.7, 1.6)),
            d_coef=float(rng.uniform(0.15, 0.5) * rng.choice([-1.0, 1.0])),
            b_coef=float(rng.uniform(0.1, 0.35) * rng.choice([-1.0, 1.0])),
        )
        ok = ok and all(abs(order - 2.0) <= 0.2 for order in report.orders)
    _verdict(8, ok)


def test_acceptance_09_green_kernel():
    rng = np.random.default_rng(109)
    fos = random_system(rng, n=4)
    ok = True
    for beta in (0.5, 1.0, 2.0 * math.pi):
        kern = GreenKernel(base=fos.system, beta=beta)
        ok = ok and np.array_equal(
            green_eval(kern, beta / 2), green_eval(kern, -beta / 2)
        )
        ok = ok and green_jump_defect(kern) <= 1e-12
    kern = GreenKernel(base=fos.system, beta=1.5)
    s0 = 0.37 * 1.5
    residuals = []
    for h in (1e-2, 5e-3, 2.5e-3):
        deriv = (green_eval(kern, s0 + h) - green_eval(kern, s0 - h)) / (2 * h)
        residuals.append(
            np.linalg.norm(deriv + fos.hmat @ green_eval(kern, s0), 2)
        )
    orders = [
        math.log2(residuals[i] / residuals[i + 1]) for i in range(2)
    ]
    ok = ok and all(order >= 1.9 for order in orders)
    _verdict(9, ok)


def test_acceptance_10_determinism(tmp_path):
    config = REPO / "configs" / "desk.toml"
    env = dict(os.environ, HHI_FORGE_THREADS="1")
    outputs = []
    for tag in ("one", "two"):
        outdir = tmp_path / tag
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "hhi_forge.cli",
                "all",
                "--config",
                str(config),
                "--out",
                str(outdir),
            ],
            capture_output=True,
            text=True,
            env=env,
            cwd=REPO,
        )
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outputs.append(
            {p.name: p.read_bytes() for p in sorted(outdir.glob("*.csv"))}
        )
    ok = bool(outputs[0]) and set(outputs[0]) == set(outputs[1])
    ok = ok and all(outputs[0][name] == outputs[1][name] for name in outputs[0])
    _verdict(10, ok)
