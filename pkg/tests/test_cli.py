"""Config validation, check mechanics, CSV contracts and exit codes."""

import csv
import math
import subprocess
import sys
from pathlib import Path

import pytest

from hhi_forge.cli import (
    CHECK_ORDER,
    TOLERANCES,
    load_config,
    main,
    validate_for_checks,
)
from hhi_forge.errors import ConfigError

BASE = """
[model]
L = 1.0
n_y = 8
kappa = 1.0

[thermal]
beta = 1.0
"""


def write_config(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE))
    assert cfg.n_y == 8 and cfg.length == 1.0 and cfg.kappa == 1.0
    assert cfg.eps == 0.0 and cfg.m0 == 1.0
    assert cfg.delta == pytest.approx(1.0 / 8)
    assert cfg.beta == 1.0 and not cfg.hawking
    assert cfg.n_s == (64, 128, 256)
    assert cfg.cylinder_n_y == 8 and cfg.cylinder_beta == 1.0
    assert cfg.checks == CHECK_ORDER
    assert cfg.outdir == "out" and cfg.seed == 0 and not cfg.snapshots
    assert cfg.tolerances == TOLERANCES


def test_hawking_beta_resolves_to_thermal_circle(tmp_path):
    text = BASE.replace('beta = 1.0', 'beta = "hawking"').replace(
        "kappa = 1.0", "kappa = 2.0"
    )
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.hawking
    assert cfg.beta == pytest.approx(math.pi)


def test_cylinder_overrides(tmp_path):
    text = BASE + "\n[cylinder]\nN_s = [16, 32]\nn_y = 4\nbeta = 0.5\n"
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.n_s == (16, 32)
    assert cfg.cylinder_n_y == 4 and cfg.cylinder_beta == 0.5
    assert cfg.n_y == 8  # model mesh untouched


def test_checks_all_expands_in_order_without_duplicates(tmp_path):
    text = BASE + '\n[run]\nchecks = ["states-check", "all"]\n'
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.checks[0] == "states-check"
    assert sorted(cfg.checks) == sorted(CHECK_ORDER)
    assert len(cfg.checks) == len(CHECK_ORDER)


def test_tolerance_override(tmp_path):
    text = BASE + "\n[tolerances]\ngluing = 0.5\n"
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.tolerances["gluing"] == 0.5
    assert cfg.tolerances["projector"] == TOLERANCES["projector"]


@pytest.mark.parametrize(
    "mangle, fragment",
    [
        (lambda t: t.replace("[thermal]\nbeta = 1.0", ""), "[thermal]"),
        (lambda t: t.replace("n_y = 8\n", ""), "[model] n_y"),
        (lambda t: t.replace("n_y = 8", "n_y = 8.5"), "[model] n_y"),
        (lambda t: t.replace("n_y = 8", "n_y = -4"), "[model] n_y"),
        (lambda t: t.replace("L = 1.0", "L = 0.0"), "[model] L"),
        (lambda t: t.replace("L = 1.0", 'L = "one"'), "[model] L"),
        (lambda t: t.replace("kappa = 1.0", "kappa = true"), "[model] kappa"),
        (lambda t: t + "\n[model.extra]\nx = 1\n", "[model]"),
        (
            lambda t: t.replace("kappa = 1.0", "kappa = 1.0\ndelta = 0.2"),
            "[model] delta",
        ),
        (lambda t: t.replace("beta = 1.0", "beta = -2.0"), "[thermal] beta"),
        (lambda t: t.replace("beta = 1.0", 'beta = "cold"'), "[thermal] beta"),
        (lambda t: t + "\n[cylinder]\nN_s = []\n", "[cylinder] N_s"),
        (lambda t: t + "\n[cylinder]\nN_s = [15]\n", "[cylinder] N_s"),
        (lambda t: t + "\n[cylinder]\nN_s = [0]\n", "[cylinder] N_s"),
        (lambda t: t + "\n[cylinder]\nN_s = [32, 32]\n", "[cylinder] N_s"),
        (lambda t: t + "\n[cylinder]\nN_s = [32, 16]\n", "[cylinder] N_s"),
        (lambda t: t + '\n[cylinder]\nN_s = ["x"]\n', "[cylinder] N_s"),
        (lambda t: t + "\n[run]\nchecks = []\n", "[run] checks"),
        (lambda t: t + '\n[run]\nchecks = ["warp"]\n', "[run] checks"),
        (lambda t: t + '\n[run]\noutdir = ""\n', "[run] outdir"),
        (lambda t: t + "\n[run]\nseed = -1\n", "[run] seed"),
        (lambda t: t + "\n[run]\nsnapshots = 1\n", "[run] snapshots"),
        (lambda t: t + "\n[tolerances]\nwarp = 0.1\n", "[tolerances] warp"),
        (lambda t: t + "\n[tolerances]\ngluing = -0.1\n", "[tolerances] gluing"),
        (lambda t: t + "\n[mystery]\nx = 1\n", "mystery"),
    ],
)
def test_config_rejections_name_the_field(tmp_path, mangle, fragment):
    path = write_config(tmp_path, mangle(BASE))
    with pytest.raises(ConfigError, match=r".*") as err:
        load_config(path)
    assert fragment in str(err.value)


def test_delta_consistent_is_accepted(tmp_path):
    text = BASE.replace("kappa = 1.0", "kappa = 1.0\ndelta = 0.125")
    cfg = load_config(write_config(tmp_path, text))
    assert cfg.delta == 0.125


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.toml")


def test_toml_syntax_error_is_config_error(tmp_path):
    path = write_config(tmp_path, "[model\nL = ")
    with pytest.raises(ConfigError):
        load_config(path)


def test_disk_checks_demand_hawking_temperature(tmp_path):
    cfg = load_config(write_config(tmp_path, BASE))
    with pytest.raises(ConfigError, match=r"\[thermal\] beta"):
        validate_for_checks(cfg, ("hhi",))
    validate_for_checks(cfg, ("states-check",))  # no disk, no constraint


def test_disk_checks_demand_enough_nodes(tmp_path):
    text = BASE.replace("beta = 1.0", 'beta = "hawking"')
    cfg = load_config(write_config(tmp_path, text))
    with pytest.raises(ConfigError, match=r"\[model\] n_y"):
        validate_for_checks(cfg, ("hhi",))


# ---------------------------------------------------------------------------
# CLI runs (in-process via main)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def test_main_exit_2_and_stderr_on_config_error(tmp_path, capsys):
    path = write_config(tmp_path, BASE.replace("n_y = 8\n", ""))
    code = main(["validate-model", "--config", str(path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "config error" in err and "[model] n_y" in err


def test_validate_model_passes_on_static_slice(tmp_path, capsys):
    path = write_config(tmp_path, BASE)
    code = main(["validate-model", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 0
    out = capsys.readouterr().out
    assert "validate-model: PASS" in out and "overall: PASS" in out


def test_compare_calderon_csv_contract(tmp_path, capsys):
    text = BASE + "\n[cylinder]\nN_s = [16, 32]\nn_y = 4\n"
    path = write_config(tmp_path, text)
    outdir = tmp_path / "o"
    code = main(["compare-calderon", "--config", str(path), "--out", str(outdir)])
    assert code == 0
    rows = read_csv(outdir / "compare_calderon.csv")
    assert rows[0] == ["n_y", "N_s", "beta", "error_fro", "error_op", "observed_order"]
    assert [r[:3] for r in rows[1:]] == [["4", "16", "1.0"], ["4", "32", "1.0"]]
    errors = [float(r[4]) for r in rows[1:]]
    assert errors[1] < errors[0]
    assert math.isnan(float(rows[1][5]))
    assert float(rows[2][5]) > 0.5
    raw = (outdir / "compare_calderon.csv").read_bytes()
    assert b"\r" not in raw  # LF only


def test_states_check_csv_contract(tmp_path, capsys):
    path = write_config(tmp_path, BASE)
    outdir = tmp_path / "o"
    code = main(["states-check", "--config", str(path), "--out", str(outdir)])
    assert code == 0
    rows = read_csv(outdir / "state_axioms.csv")
    assert rows[0] == [
        "state",
        "min_eig_plus",
        "min_eig_minus",
        "ccr_defect",
        "purity_defect",
    ]
    names = [r[0] for r in rows[1:]]
    assert names == ["vacuum", "kms", "double_kms", "wedge_doubled"]
    purity = {r[0]: float(r[4]) for r in rows[1:]}
    assert purity["vacuum"] < 1e-10 and purity["double_kms"] < 1e-10
    assert purity["kms"] > 0.1  # thermal restriction is genuinely mixed
    out = capsys.readouterr().out
    assert "detailed_balance" in out


def test_hhi_mechanics_small_mesh(tmp_path, capsys):
    text = (
        BASE.replace("n_y = 8", "n_y = 12").replace("beta = 1.0", 'beta = "hawking"')
        + "\n[run]\nsnapshots = true\n\n[tolerances]\ngluing = 0.9\n"
    )
    path = write_config(tmp_path, text)
    outdir = tmp_path / "o"
    code = main(["hhi", "--config", str(path), "--out", str(outdir)])
    assert code == 0
    rows = read_csv(outdir / "hhi.csv")
    assert rows[0] == ["mesh", "support_offset", "gluing_rel_error"]
    assert [r[:2] for r in rows[1:]] == [["12", "3"], ["24", "3"]]
    assert float(rows[2][2]) < float(rows[1][2])
    axioms = read_csv(outdir / "hhi_state_axioms.csv")
    assert [r[0] for r in axioms[1:]] == ["hhi_n12", "hhi_n24"]
    assert all(float(r[3]) < 1e-10 for r in axioms[1:])  # ccr defect
    snapshot = read_csv(outdir / "disk_snapshot.csv")
    assert snapshot[0] == ["x", "y", "re", "im"]
    assert len(snapshot) > 100


def test_partial_report_on_computation_error(tmp_path, capsys):
    # eps = 1.2 makes the background spacelike somewhere: wick rotation
    # raises, the check fails, the run still reports and exits 1
    text = BASE.replace("kappa = 1.0", "kappa = 1.0\neps = 1.2")
    path = write_config(tmp_path, text)
    code = main(["validate-model", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 1
    out = capsys.readouterr().out
    assert "validate-model: FAIL" in out
    assert "NotSectorial" in out
    assert "overall: FAIL" in out


def test_strict_escalates_advisories(tmp_path, capsys):
    # an impossible idempotency target cannot fail the hard gates, only warn
    text = (
        BASE
        + "\n[cylinder]\nN_s = [16, 32]\nn_y = 4\n"
        + "\n[tolerances]\nelliptic_idempotency = 1e-15\n"
    )
    path = write_config(tmp_path, text)
    code = main(
        ["cylinder-projectors", "--config", str(path), "--out", str(tmp_path / "a")]
    )
    out = capsys.readouterr().out
    assert code == 0 and "advisory" in out
    code = main(
        [
            "cylinder-projectors",
            "--config",
            str(path),
            "--out",
            str(tmp_path / "b"),
            "--strict",
        ]
    )
    out = capsys.readouterr().out
    assert code == 1 and "FAIL (strict)" in out


# ---------------------------------------------------------------------------
# determinism (subprocess, fixed thread count)


def test_repeated_runs_write_identical_csv_bytes(tmp_path):
    text = (
        BASE.replace("n_y = 8", "n_y = 12")
        + "\n[cylinder]\nN_s = [16, 32]\nn_y = 4\n\n[run]\nseed = 11\n"
    )
    path = write_config(tmp_path, text)
    outs = []
    for tag in ("one", "two"):
        outdir = tmp_path / tag
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "hhi_forge.cli",
                "states-check",
                "--config",
                str(path),
                "--out",
                str(outdir),
            ],
            capture_output=True,
            text=True,
            env={"HHI_FORGE_THREADS": "1", "PATH": "/usr/bin:/bin"},
        )
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append(outdir)
    for name in ("state_axioms.csv",):
        first = (outs[0] / name).read_bytes()
        second = (outs[1] / name).read_bytes()
        assert first == second
