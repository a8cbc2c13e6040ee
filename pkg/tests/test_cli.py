"""CLI surface: run, compare, oracle tables, determinism, error paths."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qarrival.cli import main
from qarrival.config import config_hash


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


ABSORBER_CFG = {
    "scenario": "absorber-1d",
    "seed": 1,
    "initial_state": {"kind": "gaussian", "sigma": 2.0, "k0": 1.0},
    "detector": {"R": 40.0, "lam": 0.5},
    "grid": {"n": 1024, "length": 200.0},
    "evolution": {"dt": 0.1, "t_max": 120.0},
    "histogram": {"n_tau": 40, "tau_max": 3.0},
}


class TestRun:
    def test_absorber_end_to_end(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "a.json", ABSORBER_CFG)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"] == "absorber-1d"
        assert manifest["config_hash"] == config_hash(ABSORBER_CFG)
        assert (out / "histogram.csv").exists()
        assert (out / "oracle.csv").exists()
        assert manifest["summary"]["tv"] < 0.1
        assert manifest["wall_time_seconds"] > 0

    def test_deterministic_reruns_bit_identical(self, tmp_path):
        cfg = write_config(tmp_path, "a.json", ABSORBER_CFG)
        outs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            assert main(["run", "--config", cfg, "--out", str(out),
                         "--deterministic"]) == 0
            outs.append(out)
        for fname in ("histogram.csv", "oracle.csv", "manifest.json"):
            assert (outs[0] / fname).read_bytes() == \
                (outs[1] / fname).read_bytes()

    def test_zeno_run(self, tmp_path):
        cfg = write_config(tmp_path, "z.json", {
            "scenario": "zeno-1d",
            "initial_state": {"kind": "gaussian", "sigma": 2.0, "k0": 1.0},
            "detector": {"R": 60.0, "T_meas": 6.0, "sigma1": 0.3, "n_max": 20},
            "grid": {"n": 2048, "length": 300.0},
            "evolution": {"dt": 0.1},
        })
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        ledger = (out / "ledger.csv").read_text().splitlines()
        assert ledger[0] == "n,t,p_detect,survival,oracle_survival,w_n,bound_ratio"
        assert len(ledger) == 21

    def test_warning_surfaces_in_manifest(self, tmp_path):
        cfg_data = dict(ABSORBER_CFG)
        cfg_data["evolution"] = {"dt": 0.1, "t_max": 30.0}  # under-capture
        cfg = write_config(tmp_path, "w.json", cfg_data)
        out = tmp_path / "out"
        assert main(["run", "--config", cfg, "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert any("under-capture" in w for w in manifest["warnings"])

    def test_monte_carlo_determinism_same_seed(self, tmp_path):
        cfg_data = {
            "scenario": "classical-nosignal",
            "seed": 7,
            "n_samples": 20000,
            "initial_state": {"k0": [0, 0, 0.5], "sigma_k": 0.12},
            "detector": {"R": 30.0, "t_cap": 120.0, "t_split": 60.0,
                         "future_slope": 0.5},
        }
        cfg = write_config(tmp_path, "ns.json", cfg_data)
        blobs = []
        for name in ("m1", "m2"):
            out = tmp_path / name
            assert main(["run", "--config", cfg, "--out", str(out),
                         "--deterministic"]) == 0
            blobs.append((out / "nosignal_counts.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestErrors:
    def test_unknown_scenario_key_pointer(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "bad.json", {"scenario": "nope"})
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["key"] == "scenario"

    def test_missing_field_pointer(self, tmp_path, capsys):
        cfg_data = dict(ABSORBER_CFG)
        del cfg_data["grid"]
        cfg = write_config(tmp_path, "bad.json", cfg_data)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["key"] == "grid"

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        rc = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_memory_cap(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("QARRIVAL_MEMORY_CAP_MB", "0.05")
        cfg = write_config(tmp_path, "big.json", ABSORBER_CFG)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["key"] == "grid.n"


class TestCompareAndOracle:
    def test_compare_identical_zero_tv(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "a.json", ABSORBER_CFG)
        out = tmp_path / "out"
        main(["run", "--config", cfg, "--out", str(out)])
        capsys.readouterr()
        rc = main(["compare", "--histogram", str(out / "histogram.csv"),
                   "--against", str(out / "histogram.csv")])
        assert rc == 0
        res = json.loads(capsys.readouterr().out)
        assert res["tv"] == 0.0

    def test_compare_against_oracle(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "a.json", ABSORBER_CFG)
        out = tmp_path / "out"
        main(["run", "--config", cfg, "--out", str(out)])
        capsys.readouterr()
        rc = main(["compare", "--histogram", str(out / "histogram.csv"),
                   "--against", str(out / "oracle.csv")])
        assert rc == 0
        res = json.loads(capsys.readouterr().out)
        assert 0.0 < res["tv"] < 0.1

    def test_oracle_table(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "orc.json", {
            "oracle": {"which": "step-coefficients", "k": "0.5:2.0:4",
                       "lam": "1e-3:1e-1:3:log"}})
        out = tmp_path / "out"
        rc = main(["oracle", "--config", cfg, "--out", str(out)])
        assert rc == 0
        lines = (out / "oracle_step-coefficients.csv").read_text().splitlines()
        assert lines[0].startswith("k,lam,K_re")
        assert len(lines) == 13

    def test_compare_binning_mismatch(self, tmp_path, capsys):
        cfg_a = write_config(tmp_path, "a.json", ABSORBER_CFG)
        cfg_b_data = dict(ABSORBER_CFG)
        cfg_b_data["histogram"] = {"n_tau": 37, "tau_max": 3.0}
        cfg_b = write_config(tmp_path, "b.json", cfg_b_data)
        out_a, out_b = tmp_path / "oa", tmp_path / "ob"
        main(["run", "--config", cfg_a, "--out", str(out_a)])
        main(["run", "--config", cfg_b, "--out", str(out_b)])
        capsys.readouterr()
        rc = main(["compare", "--histogram", str(out_a / "histogram.csv"),
                   "--against", str(out_b / "histogram.csv")])
        assert rc == 1
        err = json.loads(capsys.readouterr().err)
        assert "binning mismatch" in err["message"]

    def test_bohm_threads_deterministic(self, tmp_path):
        cfg_data = {
            "scenario": "bohm-ensemble",
            "seed": 3,
            "initial_state": {"kind": "gaussian", "sigma": 2.0, "k0": 1.0},
            "detector": {"R": 30.0},
            "grid": {"n": 2048, "length": 360.0},
            "evolution": {"dt": 0.1, "t_max": 80.0},
            "trajectories": {"n_traj": 60, "dt": 0.1,
                             "lambdas": [0.2, 0.4]},
        }
        cfg = write_config(tmp_path, "bh.json", cfg_data)
        blobs = []
        for name, threads in (("t1", "1"), ("t2", "2")):
            out = tmp_path / name
            assert main(["run", "--config", cfg, "--out", str(out),
                         "--threads", threads, "--deterministic"]) == 0
            blobs.append((out / "trajectories_lam0.2.csv").read_bytes())
        assert blobs[0] == blobs[1]

    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert "absorber-1d" in out and "dirac-suite" in out


class TestConsoleScript:
    def test_entry_point_runs(self):
        proc = subprocess.run([sys.executable, "-m", "qarrival.cli",
                               "list-scenarios"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        assert "zeno-1d" in proc.stdout
