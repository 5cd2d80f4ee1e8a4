"""End-to-end checks of the CLI harness on small, fast configurations.

The long-running subcommands (hilbert-build, knudsen-sweep, report) are
exercised by the acceptance suite; here we cover configuration handling,
exit codes, manifests, and determinism of the cheap diagnostics.
"""

import csv
import json

import pytest

from rlandau.__main__ import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("harness")


@pytest.fixture(scope="module")
def cfg_path(workdir):
    p = workdir / "cfg.toml"
    p.write_text(
        "\n".join(
            [
                "[run]",
                f'output_dir = "{workdir}"',
                "[momentum]",
                "points_per_axis = 10",
                "[euler]",
                "t_final = 0.05",
            ]
        )
    )
    return str(p)


def read_metrics(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {r["metric"]: float(r["value"]) for r in rows}


class TestExitCodes:
    def test_missing_config_file(self, workdir):
        assert main(["check-kernel", "--config", str(workdir / "nope.toml")]) == 2

    def test_invalid_config(self, workdir):
        bad = workdir / "bad.toml"
        bad.write_text("[nope]\nx = 1\n")
        assert main(["check-kernel", "--config", str(bad)]) == 2

    def test_sweep_requires_hilbert_snapshot(self, workdir):
        sub = workdir / "empty"
        sub.mkdir()
        cfg = sub / "cfg.toml"
        cfg.write_text(f'[run]\noutput_dir = "{sub}"\n')
        assert main(["knudsen-sweep", "--config", str(cfg)]) == 3

    def test_report_requires_sweep(self, workdir):
        sub = workdir / "empty2"
        sub.mkdir()
        cfg = sub / "cfg.toml"
        cfg.write_text(f'[run]\noutput_dir = "{sub}"\n')
        assert main(["report", "--config", str(cfg)]) == 3


class TestCheckKernel:
    def test_runs_and_reports(self, workdir, cfg_path):
        assert main(["check-kernel", "--config", cfg_path]) == 0
        m = read_metrics(workdir / "kernel_checks.csv")
        assert m["projection_identity_max_defect"] <= 1e-10
        assert m["min_eigenvalue"] >= -1e-12
        assert m["equilibrium_annihilation_max"] <= 1e-6 * m["collision_peak_scale"]
        assert m["conservation_residual_max"] <= 1e-8

    def test_manifest_written(self, workdir, cfg_path):
        manifest = json.loads((workdir / "check-kernel_manifest.json").read_text())
        assert manifest["subcommand"] == "check-kernel"
        assert len(manifest["config_hash"]) == 64

    def test_determinism(self, workdir, cfg_path):
        first = (workdir / "kernel_checks.csv").read_bytes()
        assert main(["check-kernel", "--config", cfg_path]) == 0
        assert (workdir / "kernel_checks.csv").read_bytes() == first


class TestCheckLinearized:
    def test_runs_and_reports(self, workdir, cfg_path):
        assert main(["check-linearized", "--config", cfg_path]) == 0
        m = read_metrics(workdir / "linearized_checks.csv")
        assert m["null_annihilation_max_n10"] <= 1e-5
        assert m["self_adjointness_defect_n10"] <= 1e-8
        d1, d2 = m["coercivity_delta_n8"], m["coercivity_delta_n10"]
        assert d1 > 0 and d2 > 0


class TestEulerSolve:
    def test_runs_and_reports(self, workdir, cfg_path):
        assert main(["euler-solve", "--config", cfg_path]) == 0
        with open(workdir / "euler_fields.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0]) == {"t", "x", "n0", "u1", "u2", "u3", "T0"}
        times = sorted({float(r["t"]) for r in rows})
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.05)
