"""Batch front door: config-driven runs of the two construction routes.

Reads a TOML experiment config, executes the requested checks, writes CSV
files (UTF-8, LF line endings, shortest round-trip float formatting) and
prints one report line per check.  The process exits 0 iff every executed
check passed.  Set ``HHI_FORGE_THREADS`` to cap the linear-algebra worker
pools (it must be set before the package first loads numpy; the package
``__init__`` forwards it to the BLAS environment variables).

Every tolerance used by a pass/fail verdict lives in :data:`TOLERANCES` and
can be overridden per experiment from a ``[tolerances]`` config section.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib

import numpy as np

from .calderon import calderon_thermal, to_lapse, to_tilde
from .errors import ConfigError, HHIForgeError
from .euclid import (
    assemble_cylinder,
    calderon_elliptic,
    cylinder_mode_defect,
    divergence_identity_check,
    doubled_reference,
    elliptic_defect,
    extend_to_disk,
    gluing_error,
    harmonic_snapshot,
    hhi_covariances,
    wick_rotate,
)
from .model import assemble_spatial, lapse_reduce, validate_hypotheses, wedge_slice
from .states import (
    WedgeReflection,
    check_purity,
    double_kms_covariances,
    kms_covariances,
    kms_detailed_balance,
    validate_state,
    vacuum_covariances,
    wedge_double,
)

CHECK_ORDER = (
    "validate-model",
    "spectral-projectors",
    "cylinder-projectors",
    "compare-calderon",
    "states-check",
    "hhi",
    "divergence-check",
)

#: Default pass/fail thresholds; every entry may be overridden from the
#: ``[tolerances]`` section of a config file.
TOLERANCES = {
    "projector": 1e-10,  # spectral projector algebra, all three frames
    "mode_identity": 1e-10,  # per-Fourier-mode pencil identity
    "state_eig": 1e-10,  # relative positivity floor of the covariances
    "state_ccr": 1e-10,  # |lam+ - lam- - q| / |q|
    "purity_pure": 1e-10,  # pure families: vacuum, doubled, glued
    "purity_mixed": 1e-3,  # single-wedge thermal state must stay mixed
    "detailed_balance": 1e-10,  # thermal detailed balance (moderate spectra)
    "calderon_error": 5e-2,  # elliptic vs spectral at the finest level
    "calderon_order": 0.7,  # least-squares convergence order over N_s
    "elliptic_idempotency": 5e-2,  # advisory: finest-level idempotency
    "gluing": 5e-2,  # glued state vs wedge-doubled reference, finest mesh
    "divergence_order": 0.2,  # allowed deviation from second order
    "sectorial": 1.0,  # uniform-timelikeness bound on max rho |w| / N
}

# Detailed balance compares Gibbs-weighted matrix elements, so its residual
# floor is machine epsilon times e^{beta * spectral radius}; past ~10 the
# floor crosses the 1e-10 tolerance and the comparison stops meaning anything,
# so the check reports it as skipped instead.
_BALANCE_WINDOW = 10.0


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (one TOML file per experiment).

    ``cylinder_n_y`` and ``cylinder_beta`` default to the model values; they
    exist because the imaginary-time refinement study needs the resolved
    regime (``beta * omega_max`` comparable to ``N_s``), which a mesh sized
    for the disk comparison would leave by two orders of magnitude.
    """

    length: float
    n_y: int
    kappa: float
    eps: float
    m0: float
    delta: float
    beta: float
    hawking: bool
    n_s: tuple
    cylinder_n_y: int
    cylinder_beta: float
    checks: tuple
    outdir: str
    seed: int
    snapshots: bool
    tolerances: dict

    def model_slice(self):
        return wedge_slice(
            self.n_y, length=self.length, kappa=self.kappa, eps=self.eps, m0=self.m0
        )

    def cylinder_slice(self):
        return wedge_slice(
            self.cylinder_n_y,
            length=self.length,
            kappa=self.kappa,
            eps=self.eps,
            m0=self.m0,
        )


_MISSING = object()


def _take(section: dict, name: str, key: str, default=_MISSING):
    if key in section:
        return section.pop(key)
    if default is _MISSING:
        raise ConfigError(f"[{name}] {key}: required key is missing")
    return default


def _positive_float(value, name: str, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{name}] {key}: expected a number, got {value!r}")
    value = float(value)
    if not (0.0 < value < math.inf):
        raise ConfigError(f"[{name}] {key}: must be positive and finite, got {value}")
    return value


def _positive_int(value, name: str, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"[{name}] {key}: expected an integer, got {value!r}")
    if value < 1:
        raise ConfigError(f"[{name}] {key}: must be positive, got {value}")
    return value


def _reject_unknown(section: dict, name: str) -> None:
    if section:
        keys = ", ".join(sorted(section))
        raise ConfigError(f"[{name}]: unknown keys: {keys}")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")

    known = {"model", "thermal", "cylinder", "run", "tolerances"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")
    for required in ("model", "thermal"):
        if required not in raw:
            raise ConfigError(f"[{required}]: required section is missing")

    model = dict(raw["model"])
    length = _positive_float(_take(model, "model", "L"), "model", "L")
    n_y = _positive_int(_take(model, "model", "n_y"), "model", "n_y")
    kappa = _positive_float(_take(model, "model", "kappa"), "model", "kappa")
    eps = _take(model, "model", "eps", 0.0)
    if isinstance(eps, bool) or not isinstance(eps, (int, float)):
        raise ConfigError(f"[model] eps: expected a number, got {eps!r}")
    eps = float(eps)
    m0 = _positive_float(_take(model, "model", "m0", 1.0), "model", "m0")
    delta = _take(model, "model", "delta", None)
    if delta is not None:
        delta = _positive_float(delta, "model", "delta")
        if abs(delta - length / n_y) > 1e-12 * (length / n_y):
            raise ConfigError(
                f"[model] delta: inconsistent with L / n_y = {length / n_y!r},"
                f" got {delta!r}"
            )
    else:
        delta = length / n_y
    _reject_unknown(model, "model")

    thermal = dict(raw["thermal"])
    beta_raw = _take(thermal, "thermal", "beta")
    if isinstance(beta_raw, str):
        if beta_raw != "hawking":
            raise ConfigError(
                f'[thermal] beta: expected a positive number or "hawking",'
                f" got {beta_raw!r}"
            )
        hawking = True
        beta = 2.0 * math.pi / kappa
    else:
        hawking = False
        beta = _positive_float(beta_raw, "thermal", "beta")
    _reject_unknown(thermal, "thermal")

    cylinder = dict(raw.get("cylinder", {}))
    n_s_raw = _take(cylinder, "cylinder", "N_s", [64, 128, 256])
    if not isinstance(n_s_raw, list) or not n_s_raw:
        raise ConfigError("[cylinder] N_s: expected a nonempty list of integers")
    n_s = []
    for entry in n_s_raw:
        entry = _positive_int(entry, "cylinder", "N_s")
        if entry % 2 != 0:
            raise ConfigError(f"[cylinder] N_s: entries must be even, got {entry}")
        if n_s and entry <= n_s[-1]:
            raise ConfigError(
                "[cylinder] N_s: refinement ladder must be strictly increasing,"
                f" got {entry} after {n_s[-1]}"
            )
        n_s.append(entry)
    cyl_n_y = _positive_int(
        _take(cylinder, "cylinder", "n_y", n_y), "cylinder", "n_y"
    )
    cyl_beta_raw = _take(cylinder, "cylinder", "beta", None)
    cyl_beta = (
        beta if cyl_beta_raw is None else _positive_float(cyl_beta_raw, "cylinder", "beta")
    )
    _reject_unknown(cylinder, "cylinder")

    run = dict(raw.get("run", {}))
    checks_raw = _take(run, "run", "checks", ["all"])
    if not isinstance(checks_raw, list) or not checks_raw:
        raise ConfigError("[run] checks: expected a nonempty list of check names")
    checks = []
    for entry in checks_raw:
        if entry == "all":
            for name in CHECK_ORDER:
                if name not in checks:
                    checks.append(name)
            continue
        if entry not in CHECK_ORDER:
            raise ConfigError(
                f"[run] checks: unknown check {entry!r}; valid names:"
                f" {', '.join(CHECK_ORDER)}, all"
            )
        if entry not in checks:
            checks.append(entry)
    outdir = _take(run, "run", "outdir", "out")
    if not isinstance(outdir, str) or not outdir:
        raise ConfigError(f"[run] outdir: expected a nonempty string, got {outdir!r}")
    seed = _take(run, "run", "seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"[run] seed: expected a nonnegative integer, got {seed!r}")
    snapshots = _take(run, "run", "snapshots", False)
    if not isinstance(snapshots, bool):
        raise ConfigError(f"[run] snapshots: expected a boolean, got {snapshots!r}")
    _reject_unknown(run, "run")

    tolerances = dict(TOLERANCES)
    for key, value in dict(raw.get("tolerances", {})).items():
        if key not in TOLERANCES:
            raise ConfigError(
                f"[tolerances] {key}: unknown tolerance; valid names:"
                f" {', '.join(sorted(TOLERANCES))}"
            )
        tolerances[key] = _positive_float(value, "tolerances", key)

    return ExperimentConfig(
        length=length,
        n_y=n_y,
        kappa=kappa,
        eps=eps,
        m0=m0,
        delta=delta,
        beta=beta,
        hawking=hawking,
        n_s=tuple(n_s),
        cylinder_n_y=cyl_n_y,
        cylinder_beta=cyl_beta,
        checks=tuple(checks),
        outdir=outdir,
        seed=seed,
        snapshots=snapshots,
        tolerances=tolerances,
    )


# ---------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check: verdict, residuals and advisory notes.

    ``advisories`` lists mesh-limited diagnostics that exceeded their
    tolerance without failing the check; ``--strict`` escalates them.
    """

    name: str
    passed: bool
    wall_time: float
    details: dict
    advisories: tuple = ()


@dataclass(frozen=True)
class RunReport:
    """All executed checks (each exactly once) and the overall verdict."""

    results: tuple
    strict: bool

    @property
    def passed(self) -> bool:
        return all(
            r.passed and not (self.strict and r.advisories) for r in self.results
        )


def _fmt(value) -> str:
    """Shortest decimal that round-trips the double."""
    return repr(float(value))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# checks


def _check_validate_model(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    slc = cfg.model_slice()
    metric = wick_rotate(slc)
    report = validate_hypotheses(lapse_reduce(assemble_spatial(slc)))
    passed = report.passed and metric.sectorial_constant < cfg.tolerances["sectorial"]
    details = {
        "sectorial_constant": metric.sectorial_constant,
        "shift_bound_operator": report.shift_bound_operator,
        "shift_bound_pointwise": report.shift_bound_pointwise,
        "wt_relative_norm": report.wt_relative_norm,
        "wt_star_relative_norm": report.wt_star_relative_norm,
        "lapse_gradient_bound": report.lapse_gradient_bound,
        "shift_divergence_bound": report.shift_divergence_bound,
        "equivalence_lower": report.equivalence_lower,
        "equivalence_upper": report.equivalence_upper,
        "failures": ";".join(report.failures) if report.failures else "none",
    }
    return CheckResult("validate-model", passed, time.perf_counter() - t0, details)


def _check_spectral_projectors(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    fos = lapse_reduce(assemble_spatial(cfg.model_slice()))
    abstract = calderon_thermal(fos.system, cfg.beta)
    tilde = to_tilde(abstract)
    lapse = to_lapse(tilde, fos)
    details = {}
    worst = 0.0
    for pair in (abstract, tilde, lapse):
        defect = max(pair.defects().values())
        details[f"defect_{pair.frame}"] = defect
        worst = max(worst, defect)
    passed = worst <= cfg.tolerances["projector"]
    return CheckResult(
        "spectral-projectors", passed, time.perf_counter() - t0, details
    )


def _check_cylinder_projectors(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    slc = cfg.cylinder_slice()
    idems = []
    details = {}
    compl_ok = True
    for n_s in cfg.n_s:
        prob = assemble_cylinder(slc, cfg.cylinder_beta, n_s)
        _, defects = calderon_elliptic(prob)
        idem = max(defects["idempotent_plus"], defects["idempotent_minus"])
        idems.append(idem)
        details[f"idempotency_{n_s}"] = idem
        details[f"jump_condition_{n_s}"] = defects["jump_condition"]
        compl_ok = compl_ok and defects["complementarity"] <= cfg.tolerances["projector"]
    mode = cylinder_mode_defect(
        assemble_cylinder(slc, cfg.cylinder_beta, min(cfg.n_s))
    )
    details["mode_defect"] = mode
    advisories = []
    if idems[-1] > cfg.tolerances["elliptic_idempotency"]:
        advisories.append(
            f"finest-level idempotency {idems[-1]:.3e} above"
            f" {cfg.tolerances['elliptic_idempotency']:.1e}"
        )
    elif idems[-1] > 1e-10 and len(idems) > 1 and idems[-1] >= idems[0]:
        advisories.append("idempotency defect did not fall under refinement")
    passed = compl_ok and mode <= cfg.tolerances["mode_identity"]
    return CheckResult(
        "cylinder-projectors",
        passed,
        time.perf_counter() - t0,
        details,
        tuple(advisories),
    )


def _check_compare_calderon(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    slc = cfg.cylinder_slice()
    beta = cfg.cylinder_beta
    rows = []
    errors = []
    for n_s in cfg.n_s:
        prob = assemble_cylinder(slc, beta, n_s)
        defect = elliptic_defect(prob)
        order = (
            math.log2(errors[-1] / defect["error_op"]) if errors else math.nan
        )
        errors.append(defect["error_op"])
        rows.append(
            [
                str(cfg.cylinder_n_y),
                str(n_s),
                _fmt(beta),
                _fmt(defect["error_fro"]),
                _fmt(defect["error_op"]),
                _fmt(order),
            ]
        )
    _write_csv(
        outdir / "compare_calderon.csv",
        ["n_y", "N_s", "beta", "error_fro", "error_op", "observed_order"],
        rows,
    )
    details = {"final_error_op": errors[-1]}
    passed = errors[-1] <= cfg.tolerances["calderon_error"]
    if len(errors) > 1:
        spacings = np.log([beta / n_s for n_s in cfg.n_s])
        fit_order = float(np.polyfit(spacings, np.log(errors), 1)[0])
        details["fit_order"] = fit_order
        passed = passed and fit_order >= cfg.tolerances["calderon_order"]
    advisories = []
    if any(b >= a for a, b in zip(errors, errors[1:])):
        advisories.append("errors did not fall monotonically under refinement")
    return CheckResult(
        "compare-calderon",
        passed,
        time.perf_counter() - t0,
        details,
        tuple(advisories),
    )


def _state_row(name: str, pair) -> tuple[list, dict]:
    report = validate_state(pair)
    purity = check_purity(pair)
    row = [
        name,
        _fmt(report.min_eig_plus),
        _fmt(report.min_eig_minus),
        _fmt(report.ccr_defect),
        _fmt(purity.purity_defect),
    ]
    quantities = {
        "min_eig_rel": min(
            report.min_eig_plus / max(report.norm_plus, 1e-300),
            report.min_eig_minus / max(report.norm_minus, 1e-300),
        ),
        "ccr": report.ccr_defect,
        "purity": purity.purity_defect,
    }
    return row, quantities


def _check_states(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    slc = cfg.model_slice()
    fos = lapse_reduce(assemble_spatial(slc))
    beta = cfg.beta
    doubled = double_kms_covariances(fos, beta)
    states = [
        ("vacuum", vacuum_covariances(fos), True),
        ("kms", kms_covariances(fos, beta), False),
        ("double_kms", doubled, True),
        ("wedge_doubled", wedge_double(doubled, WedgeReflection.for_slice(slc)), True),
    ]
    rows = []
    details = {}
    passed = True
    tol = cfg.tolerances
    for name, pair, pure in states:
        row, quantities = _state_row(name, pair)
        rows.append(row)
        details[f"{name}_purity"] = quantities["purity"]
        passed = passed and quantities["min_eig_rel"] >= -tol["state_eig"]
        passed = passed and quantities["ccr"] <= tol["state_ccr"]
        if pure:
            passed = passed and quantities["purity"] <= tol["purity_pure"]
        else:
            passed = passed and quantities["purity"] >= tol["purity_mixed"]
    _write_csv(
        outdir / "state_axioms.csv",
        ["state", "min_eig_plus", "min_eig_minus", "ccr_defect", "purity_defect"],
        rows,
    )
    radius = float(np.max(np.abs(fos.system.raw_eigenvalues)))
    if beta * radius <= _BALANCE_WINDOW:
        balance = kms_detailed_balance(fos, beta)
        details["detailed_balance"] = balance
        passed = passed and balance <= tol["detailed_balance"]
    else:
        details["detailed_balance"] = (
            f"skipped (beta * spectral radius = {beta * radius:.1f} >"
            f" {_BALANCE_WINDOW:.0f}; the Gibbs-weighted comparison floor"
            " exceeds the tolerance there)"
        )
    return CheckResult("states-check", passed, time.perf_counter() - t0, details)


def _check_hhi(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    hawking_beta = 2.0 * math.pi / cfg.kappa
    support_offset = 3
    tol = cfg.tolerances
    rows = []
    axiom_rows = []
    details = {}
    errors = []
    passed = True
    for mesh in (cfg.n_y, 2 * cfg.n_y):
        slc = wedge_slice(
            mesh, length=cfg.length, kappa=cfg.kappa, eps=cfg.eps, m0=cfg.m0
        )
        pair, diagnostics = hhi_covariances(slc, hawking_beta)
        reference = doubled_reference(slc, hawking_beta)
        error = gluing_error(pair, reference, support_offset, mesh // 2)
        errors.append(error)
        rows.append([str(mesh), str(support_offset), _fmt(error)])
        row, quantities = _state_row(f"hhi_n{mesh}", pair)
        axiom_rows.append(row)
        passed = passed and quantities["min_eig_rel"] >= -tol["state_eig"]
        passed = passed and quantities["ccr"] <= tol["state_ccr"]
        passed = passed and quantities["purity"] <= tol["purity_pure"]
        details[f"gluing_{mesh}"] = error
        details[f"jump_condition_{mesh}"] = diagnostics["jump_condition"]
    _write_csv(
        outdir / "hhi.csv",
        ["mesh", "support_offset", "gluing_rel_error"],
        rows,
    )
    _write_csv(
        outdir / "hhi_state_axioms.csv",
        ["state", "min_eig_plus", "min_eig_minus", "ccr_defect", "purity_defect"],
        axiom_rows,
    )
    passed = passed and errors[-1] <= tol["gluing"] and errors[-1] < errors[0]
    if cfg.snapshots:
        mesh = 2 * cfg.n_y
        slc = wedge_slice(
            mesh, length=cfg.length, kappa=cfg.kappa, eps=cfg.eps, m0=cfg.m0
        )
        prob = extend_to_disk(slc, hawking_beta)
        bump = np.exp(-(((prob.xs - 0.5 * cfg.length) / (0.15 * cfg.length)) ** 2))
        snapshot = harmonic_snapshot(prob, bump)
        _write_csv(
            outdir / "disk_snapshot.csv",
            ["x", "y", "re", "im"],
            [[_fmt(v) for v in row] for row in snapshot],
        )
    return CheckResult("hhi", passed, time.perf_counter() - t0, details)


def _check_divergence(cfg: ExperimentConfig, outdir: Path) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    details = {}
    passed = True
    for draw in range(3):
        kappa = rng.uniform(0.7, 1.6)
        d_coef = rng.uniform(0.15, 0.5) * rng.choice([-1.0, 1.0])
        b_coef = rng.uniform(0.1, 0.35) * rng.choice([-1.0, 1.0])
        report = divergence_identity_check(
            kappa=kappa, d_coef=d_coef, b_coef=b_coef
        )
        for level, order in enumerate(report.orders):
            details[f"order_{draw}_{level}"] = order
            passed = passed and abs(order - 2.0) <= cfg.tolerances["divergence_order"]
    return CheckResult("divergence-check", passed, time.perf_counter() - t0, details)


_CHECK_FUNCS = {
    "validate-model": _check_validate_model,
    "spectral-projectors": _check_spectral_projectors,
    "cylinder-projectors": _check_cylinder_projectors,
    "compare-calderon": _check_compare_calderon,
    "states-check": _check_states,
    "hhi": _check_hhi,
    "divergence-check": _check_divergence,
}


# ---------------------------------------------------------------------------
# entry point


def _format_detail(value) -> str:
    if isinstance(value, float):
        return f"{value:.3e}"
    return str(value)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hhi-forge",
        description=(
            "Construct vacuum, thermal, doubled and glued-wedge covariances by"
            " two independent routes and check them against each other."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "validate-model": "check the background hypotheses and sectoriality",
        "spectral-projectors": "projector algebra of the spectral route, all frames",
        "cylinder-projectors": "elliptic projectors and the per-mode identity",
        "compare-calderon": "refinement study: elliptic vs spectral projectors",
        "states-check": "state axioms of the four covariance families",
        "hhi": "glued two-wedge state vs the wedge-doubled reference",
        "divergence-check": "second-order agreement of two divergence forms",
        "all": "run every check listed in the config",
    }
    for name, text in descriptions.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="TOML experiment file")
        cmd.add_argument("--out", help="output directory (overrides [run] outdir)")
        cmd.add_argument(
            "--strict",
            action="store_true",
            help="fail checks on advisory (mesh-limited) diagnostics too",
        )
    return parser


def validate_for_checks(cfg: ExperimentConfig, names) -> None:
    """Cross-field constraints that depend on which checks will run."""
    if "hhi" in names:
        hawking_beta = 2.0 * math.pi / cfg.kappa
        if not cfg.hawking and abs(cfg.beta - hawking_beta) > 1e-12 * hawking_beta:
            raise ConfigError(
                '[thermal] beta: disk runs need the Hawking value; set beta ='
                ' "hawking" (or the number 2 pi / kappa exactly)'
            )
        if cfg.n_y < 12:
            raise ConfigError(
                "[model] n_y: the gluing comparison needs at least 12 nodes"
                " for a probe supported 3 cells off the axis and half a slice"
                " off the outer wall"
            )


def run_checks(cfg: ExperimentConfig, names, outdir: Path, strict: bool) -> RunReport:
    """Execute ``names`` in order; computation errors fail their check."""
    outdir.mkdir(parents=True, exist_ok=True)
    results = []
    for name in names:
        t0 = time.perf_counter()
        try:
            result = _CHECK_FUNCS[name](cfg, outdir)
        except (HHIForgeError, np.linalg.LinAlgError) as exc:
            result = CheckResult(
                name,
                False,
                time.perf_counter() - t0,
                {"error": f"{type(exc).__name__}: {exc}"},
            )
        results.append(result)
    return RunReport(results=tuple(results), strict=strict)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        names = cfg.checks if args.command == "all" else (args.command,)
        validate_for_checks(cfg, names)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = Path(args.out) if args.out else Path(cfg.outdir)
    report = run_checks(cfg, names, outdir, args.strict)
    for result in report.results:
        verdict = "PASS" if result.passed else "FAIL"
        if args.strict and result.advisories and result.passed:
            verdict = "FAIL (strict)"
        body = " ".join(
            f"{key}={_format_detail(value)}" for key, value in result.details.items()
        )
        print(f"{result.name}: {verdict} ({result.wall_time:.2f}s) {body}")
        for note in result.advisories:
            print(f"  advisory: {note}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
