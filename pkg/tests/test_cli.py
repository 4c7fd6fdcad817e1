"""Tests for the config runner: validation diagnostics, exit codes,
artifact layout, and reproducibility of the CSV output."""

import json
import math
import os

import pytest

from geodrive.cli import PRESETS, main, validate_config


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def torus_trajectory_cfg(prefix):
    return {"kind": "trajectory", "manifold": "torus",
            "drive": {"T": 5.0, "dt": 0.01, "omega": [1.0, 0.7],
                      "theta0": [0.3, -0.4]},
            "output": {"prefix": prefix}}


def error_paths(cfg):
    return [path for path, _ in validate_config(cfg)]


class TestValidateConfig:
    def test_good_config_is_clean(self):
        assert validate_config(torus_trajectory_cfg("x_")) == []

    def test_missing_required_keys(self):
        paths = error_paths({"manifold": "torus"})
        assert "(root)" in paths  # both kind and output are flagged
        assert len(paths) == 2

    def test_bad_enum(self):
        cfg = torus_trajectory_cfg("x_")
        cfg["kind"] = "orbit"
        assert "kind" in error_paths(cfg)

    def test_unknown_top_level_key(self):
        cfg = torus_trajectory_cfg("x_")
        cfg["extra"] = 1
        assert validate_config(cfg)

    def test_model_manifold_mismatch(self):
        cfg = {"kind": "invariant", "manifold": "klein",
               "model": {"name": "bolza_qubit", "epsilon": 0.5},
               "output": {"prefix": "x_"}}
        assert "model.name" in error_paths(cfg)

    def test_bolza_qubit_needs_epsilon(self):
        cfg = {"kind": "invariant", "manifold": "bolza",
               "model": {"name": "bolza_qubit"}, "output": {"prefix": "x_"}}
        assert "model.epsilon" in error_paths(cfg)
        cfg["model"]["epsilon"] = 1.0  # gap closes there
        assert "model.epsilon" in error_paths(cfg)

    def test_flat_models_need_m(self):
        cfg = {"kind": "invariant", "manifold": "klein",
               "model": {"name": "klein_qubit"}, "output": {"prefix": "x_"}}
        assert "model.m" in error_paths(cfg)

    def test_kind_requirements(self):
        cfg = {"kind": "evolve", "manifold": "klein",
               "drive": {"T": 1.0}, "output": {"prefix": "x_"}}
        assert "model" in error_paths(cfg)
        cfg2 = torus_trajectory_cfg("x_")
        del cfg2["drive"]["T"]
        assert "drive.T" in error_paths(cfg2)

    def test_no_torus_response(self):
        cfg = {"kind": "response", "manifold": "torus",
               "model": {"name": "klein_qubit", "m": 2.0},
               "output": {"prefix": "x_"}}
        paths = error_paths(cfg)
        assert "manifold" in paths
        assert "model.name" in paths  # klein model on torus config

    def test_ergodicity_constraints(self):
        cfg = {"kind": "ergodicity", "manifold": "bolza",
               "drive": {"T": 10.0, "lambda": 0.5},
               "output": {"prefix": "x_"}}
        assert "drive.lambda" in error_paths(cfg)
        cfg["manifold"] = "klein"
        assert "manifold" in error_paths(cfg)

    def test_numeric_ranges(self):
        cfg = torus_trajectory_cfg("x_")
        cfg["drive"]["dt"] = -0.01
        cfg["numerics"] = {"digits": 20, "r": 1.5}
        paths = error_paths(cfg)
        assert {"drive.dt", "numerics.digits", "numerics.r"} <= set(paths)

    def test_preset_configs_pass_validation(self):
        for build in PRESETS.values():
            for job in build():
                if job["config"] is not None:
                    assert validate_config(job["config"]) == []


class TestExitCodes:
    def test_run_trajectory_and_reproducibility(self, tmp_path, capsys):
        p1 = str(tmp_path / "a_")
        p2 = str(tmp_path / "b_")
        assert main(["run", write_cfg(tmp_path, torus_trajectory_cfg(p1))]) == 0
        assert "wrote 1 file(s)" in capsys.readouterr().out
        assert main(["run", write_cfg(tmp_path, torus_trajectory_cfg(p2),
                                      name="cfg2.json")]) == 0
        csv1 = (tmp_path / "a_trajectory.csv").read_bytes()
        csv2 = (tmp_path / "b_trajectory.csv").read_bytes()
        assert csv1 == csv2
        manifest = json.loads((tmp_path / "a_manifest.json").read_text())
        assert manifest["summary"]["samples"] == 501
        assert manifest["config"]["kind"] == "trajectory"

    def test_validate_prints_plan(self, tmp_path, capsys):
        path = write_cfg(tmp_path, torus_trajectory_cfg("x_"))
        assert main(["validate", path]) == 0
        out = capsys.readouterr().out
        assert "config OK: kind=trajectory manifold=torus" in out
        assert "steps: 500" in out

    def test_bad_json_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        assert main(["run", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file_is_config_error(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.json")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_invalid_config_reports_paths(self, tmp_path, capsys):
        cfg = torus_trajectory_cfg("x_")
        del cfg["drive"]["T"]
        assert main(["run", write_cfg(tmp_path, cfg)]) == 2
        assert "drive.T" in capsys.readouterr().err

    def test_gap_closing_run_is_runtime_error(self, tmp_path, capsys):
        cfg = {"kind": "invariant", "manifold": "klein",
               "model": {"name": "klein_qubit", "m": 1.0},
               "numerics": {"grid": [40, 20]},
               "output": {"prefix": str(tmp_path / "gap_")}}
        assert main(["run", write_cfg(tmp_path, cfg)]) == 3
        assert "runtime error" in capsys.readouterr().err

    def test_unknown_preset(self, capsys):
        assert main(["preset", "fig9-nothing"]) == 2
        assert "unknown preset" in capsys.readouterr().err


class TestRunKinds:
    def run_ok(self, tmp_path, cfg):
        assert main(["run", write_cfg(tmp_path, cfg)]) == 0
        prefix = cfg["output"]["prefix"]
        return json.loads(open(prefix + "manifest.json").read())

    def test_invariant_klein(self, tmp_path):
        prefix = str(tmp_path / "inv_")
        cfg = {"kind": "invariant", "manifold": "klein",
               "model": {"name": "klein_qubit", "m": 2.0},
               "numerics": {"grid": [60, 30], "band": 1},
               "output": {"prefix": prefix}}
        manifest = self.run_ok(tmp_path, cfg)
        assert manifest["summary"]["value"] == pytest.approx(math.pi / 2,
                                                             abs=1e-2)
        assert manifest["summary"]["quantization_unit"] == pytest.approx(
            math.pi / 2)
        assert os.path.exists(prefix + "curvature.csv")

    def test_evolve_klein(self, tmp_path):
        prefix = str(tmp_path / "ev_")
        cfg = {"kind": "evolve", "manifold": "klein",
               "model": {"name": "klein_qubit", "m": 2.0},
               "drive": {"T": 10.0, "dt": 0.02, "omega": [0.2, 0.31],
                         "theta0": [-math.pi, -math.pi]},
               "output": {"prefix": prefix}}
        manifest = self.run_ok(tmp_path, cfg)
        summary = manifest["summary"]
        assert summary["max_norm_deviation"] < 1e-9
        assert summary["steps"] == 500
        assert 0.0 < summary["min_fidelity"] <= 1.0
        header = open(prefix + "evolve.csv").readline().strip()
        assert header == "t,norm,fidelity"

    def test_response_klein(self, tmp_path):
        prefix = str(tmp_path / "resp_")
        cfg = {"kind": "response", "manifold": "klein",
               "model": {"name": "klein_qubit", "m": 2.0},
               "drive": {"T": 50.0, "dt": 0.02, "omega": [0.5, 0.81],
                         "theta0": [-math.pi, -math.pi]},
               "output": {"prefix": prefix}}
        manifest = self.run_ok(tmp_path, cfg)
        summary = manifest["summary"]
        assert summary["norm_deviation"] < 1e-9
        assert summary["normalization"] == pytest.approx(0.81 ** 2 / math.pi)
        assert math.isfinite(summary["final_running_average"])

    def test_ergodicity_short(self, tmp_path):
        prefix = str(tmp_path / "erg_")
        cfg = {"kind": "ergodicity", "manifold": "bolza",
               "drive": {"T": 30.0, "dt": 0.01, "lambda": 1.0,
                         "direction": math.pi / 9},
               "output": {"prefix": prefix}}
        manifest = self.run_ok(tmp_path, cfg)
        summary = manifest["summary"]
        assert summary["r"] == 0.6
        assert summary["final_relative_error"] < 0.5
        assert os.path.exists(prefix + "area.csv")
        assert os.path.exists(prefix + "angles.csv")


class TestPreset:
    def test_fig4_chern_end_to_end(self, tmp_path, capsys):
        out = str(tmp_path / "chern")
        assert main(["preset", "fig4-chern", "--out", out]) == 0
        stdout = capsys.readouterr().out
        assert "OFF TARGET" not in stdout
        manifest = json.loads(open(os.path.join(out, "manifest.json")).read())
        rows = manifest["summary"]["comparisons"]
        assert len(rows) == 7
        assert all(row["within_tolerance"] for row in rows)
        assert os.path.exists(os.path.join(out, "summary.csv"))
