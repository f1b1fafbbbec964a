"""Command-line interface: exit codes, reports, determinism, sweeps."""

import csv
import json
import subprocess

import numpy as np
import pytest

from attractorlab.cli import main


def _read_report(out_dir):
    with open(out_dir / "report.json") as fh:
        return json.load(fh)


def _read_series(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    v = np.array([float(r["value_re"]) + 1j * float(r["value_im"]) for r in rows])
    return t, v


class TestGunCommand:
    def test_runs_green(self, tmp_path, capsys):
        out = tmp_path / "gun"
        assert main(["gun", "--out", str(out)]) == 0
        assert "ok" in capsys.readouterr().out
        report = _read_report(out)
        assert all(report["verdicts"].values())
        assert report["metrics"]["k"] == pytest.approx(1.0, abs=1e-8)
        assert report["metrics"]["omega"] == pytest.approx(0.5, abs=1e-10)

    def test_action_series_round_trips(self, tmp_path):
        out = tmp_path / "gun"
        assert main(["gun", "--out", str(out)]) == 0
        t, v = _read_series(out / "ray_action.csv")
        assert t[0] == 0.0
        assert v[-1].real == pytest.approx(8.0 / 3.0, abs=1e-4)
        assert np.all(v.imag == 0.0)

    def test_set_override_applies(self, tmp_path):
        out = tmp_path / "gun"
        assert main(["gun", "--set", "t_final=3.0", "--out", str(out)]) == 0
        report = _read_report(out)
        assert report["config"]["t_final"] == 3.0
        # 2/3 through the ramp, then unit speed: S = 2/3 + 1
        assert report["metrics"]["action_final"] == pytest.approx(5.0 / 3.0, abs=1e-4)

    def test_deterministic_reports(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["gun", "--seed", "7", "--out", str(out1)]) == 0
        assert main(["gun", "--seed", "7", "--out", str(out2)]) == 0
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        assert (out1 / "ray_x3.csv").read_bytes() == (out2 / "ray_x3.csv").read_bytes()

    def test_plots_flag_writes_svg(self, tmp_path):
        out = tmp_path / "gun"
        assert main(["gun", "--set", "plots=true", "--out", str(out)]) == 0
        assert (out / "ray_action.svg").exists()
        assert _read_report(out)["series"]["ray_action"]["plot"] == "ray_action.svg"


class TestStationaryCommand:
    def test_orbit_report(self, tmp_path):
        out = tmp_path / "st"
        assert main(["stationary", "--set", "omega=0.6", "--out", str(out)]) == 0
        report = _read_report(out)
        assert report["metrics"]["amplitude"] == pytest.approx(np.sqrt(1.6), abs=1e-10)
        assert report["metrics"]["residual"] <= 1e-8
        # the exported profile peaks at the origin
        t, v = _read_series(out / "profile.csv")
        i0 = int(np.argmin(np.abs(t)))
        assert v[i0].real == pytest.approx(np.sqrt(1.6), abs=2e-4)
        assert v[i0].real == report["metrics"]["profile_at_zero"]

    def test_constant_states_report(self, tmp_path):
        out = tmp_path / "stl"
        assert main(["stationary", "--set", "model.kind=lamb_string", "--out", str(out)]) == 0
        report = _read_report(out)
        assert report["metrics"]["n_states"] == 3
        assert report["metrics"]["n_stable"] == 2


class TestSpectrumCommand:
    def test_orbit_tone(self, tmp_path):
        out = tmp_path / "sp"
        code = main(
            [
                "spectrum",
                "--set", "grid.x_min=-60.0",
                "--set", "grid.x_max=60.0",
                "--set", "grid.n=2401",
                "--set", "plan.t_final=20.0",
                "--set", "plan.dt=0.0125",
                "--set", "initial.type=orbit",
                "--set", "initial.omega=0.99",
                "--set", "window=10.0",
                "--out", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert abs(report["metrics"]["omega_estimate"]) == pytest.approx(0.99, abs=0.05)
        assert report["metrics"]["spectral_concentration"] >= 0.95


class TestErrorPaths:
    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        code = main(["gun", "--set", "bogus_key=1", "--out", str(tmp_path / "x")])
        assert code == 2
        assert "bogus_key" in capsys.readouterr().err

    def test_failing_physics_is_runtime_error(self, tmp_path, capsys):
        # a reversed ramp pushes the electron below the cathode plane
        code = main(["gun", "--set", "phi_star=-0.5", "--out", str(tmp_path / "x")])
        assert code == 3
        assert "turning" in capsys.readouterr().err

    def test_verdict_failure_exit_code(self, tmp_path, capsys):
        # near-field screen: the Born proportionality verdict must fail
        out = tmp_path / "near"
        code = main(
            [
                "diffract",
                "--set", "screen.distance=4.0",
                "--set", "screen.half_width=4.0",
                "--out", str(out),
            ]
        )
        assert code == 1
        printed = capsys.readouterr().out
        assert "FAILED verdicts" in printed
        assert "born" in printed
        assert _read_report(out)["metrics"]["born_spread"] > 0.05

    def test_config_file_must_be_object(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("[1, 2]")
        assert main(["gun", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


class TestDiffractCommand:
    def test_far_field_green(self, tmp_path):
        out = tmp_path / "d"
        assert main(["diffract", "--out", str(out)]) == 0
        report = _read_report(out)
        assert report["verdicts"]["born_spread"]
        assert report["verdicts"]["fringe_rel_error"]
        assert report["metrics"]["quadrature_agreement"] <= 1e-6
        assert report["metrics"]["fringe_rel_error"] <= 0.02


class TestPipelineCommand:
    def test_gun_feeds_screen(self, tmp_path):
        out = tmp_path / "p"
        assert main(["pipeline", "--out", str(out)]) == 0
        report = _read_report(out)
        # beam momentum from the gun drives the optics
        assert report["metrics"]["gun_k"] == pytest.approx(1.0, abs=1e-8)
        assert report["verdicts"]["diffract_born_spread"]
        assert report["verdicts"]["diffract_fringe_rel_error"]
        assert set(report["series"]) >= {"ray_action", "intensity_slice"}


class TestSweepCommand:
    def test_two_point_sweep(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ATTRACTORLAB_THREADS", "1")
        out = tmp_path / "sw"
        cfg = tmp_path / "sweep.json"
        cfg.write_text(
            json.dumps(
                {
                    "command": "gun",
                    "grid": {"phi_star": [0.5, 0.72]},
                    "base": {"t_final": 4.0},
                }
            )
        )
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert (out / "point_0000" / "report.json").exists()
        assert (out / "point_0001" / "report.json").exists()
        ks = [float(r["k"]) for r in rows]
        assert ks[0] == pytest.approx(1.0, abs=1e-8)
        assert ks[1] == pytest.approx(np.sqrt(2 * 0.72), abs=1e-8)

    def test_empty_grid_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.json"
        cfg.write_text(json.dumps({"command": "gun", "grid": {}}))
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


class TestSimulateCommand:
    def test_short_run_produces_report(self, tmp_path):
        out = tmp_path / "sim"
        code = main(
            [
                "simulate",
                "--seed", "3",
                "--set", "grid.x_min=-40.0",
                "--set", "grid.x_max=40.0",
                "--set", "grid.n=1601",
                "--set", "plan.t_final=30.0",
                "--set", "plan.flush_stride=20",
                "--set", "diagnostics.orbit_count=16",
                "--out", str(out),
            ]
        )
        assert code in (0, 1)  # short horizons may legitimately miss a verdict
        report = _read_report(out)
        assert set(report["series"]) >= {"observation", "local_seminorm", "attractor_distance"}
        assert "energy_ledger" in report["metrics"]
        assert np.isfinite(report["metrics"]["fatou_gap"])
        t, v = _read_series(out / "observation.csv")
        assert t[-1] == pytest.approx(30.0)
        assert np.isfinite(v).all()


class TestConsoleScript:
    def test_entry_point_runs(self, tmp_path):
        proc = subprocess.run(
            ["attractorlab", "gun", "--out", str(tmp_path / "g")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "g" / "report.json").exists()
