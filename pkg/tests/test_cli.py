from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

import hrctrack as ht
from hrctrack.cli import main


def write_config(tmp_path: Path, name: str = "config.json", **overrides) -> Path:
    doc = {
        "mode": "detection",
        "grid": {"width": 3, "height": 3},
        "stay_probability": 0.4,
        "horizon": 4,
        "endpoints": {"kind": "mixture", "alpha": 0.5},
        "observation": {"kind": "single", "sigma2": 1.0, "epsilon": 0.5},
        "trials": 4,
        "seed": 11,
        "trackers": ["hrc", "hmc"],
        "threads": 1,
    }
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestModelCommand:
    def test_written_document_is_lossless(self, tmp_path):
        cfg_path = write_config(tmp_path)
        out = tmp_path / "model.json"
        assert main(["model", "--config", str(cfg_path), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        cfg = ht.config_from_json(cfg_path.read_text())
        bundle = ht.build_models(cfg)
        assert doc["n"] == 9
        assert doc["T"] == 4
        assert np.array_equal(np.array(doc["A"]), bundle.base)
        assert np.array_equal(np.array(doc["Pi"]), bundle.endpoint)
        assert doc["beta"] == bundle.beta
        assert doc["config_hash"] == ht.config_hash(cfg)

    def test_stdout_mode(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        assert main(["model", "--config", str(cfg_path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["grid"] == {"width": 3, "height": 3}

    def test_infeasible_model_exits_three(self, tmp_path, capsys):
        cfg_path = write_config(
            tmp_path,
            grid={"width": 8, "height": 8},
            horizon=2,
            endpoints={"kind": "crossing"},
        )
        assert main(["model", "--config", str(cfg_path)]) == 3
        assert "model error" in capsys.readouterr().err


class TestConfigErrors:
    def test_bad_field_exits_two_and_names_path(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, endpoints={"kind": "mixture", "alpha": 1.5})
        assert main(["model", "--config", str(cfg_path)]) == 2
        err = capsys.readouterr().err
        assert "endpoints.alpha" in err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["model", "--config", str(tmp_path / "nope.json")]) == 2
        assert "no such file" in capsys.readouterr().err

    def test_unparseable_file(self, tmp_path, capsys):
        bad = tmp_path / "broken.json"
        bad.write_text("{oops")
        assert main(["model", "--config", str(bad)]) == 2
        assert "invalid JSON" in capsys.readouterr().err

    def test_config_required(self, capsys):
        assert main(["model"]) == 2
        assert "config" in capsys.readouterr().err


class TestSimulateFilterDetect:
    def test_round_trip(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        sim_out = tmp_path / "sim.json"
        assert main(["simulate", "--config", str(cfg_path), "--out", str(sim_out)]) == 0
        sim = json.loads(sim_out.read_text())
        assert sim["hypothesis"] == "target"
        assert len(sim["sequences"]) == 4
        first = sim["sequences"][0]
        assert len(first["path"]) == 5
        scans = np.asarray(first["scans"])
        assert scans.shape == (5, 1, 2)

        filt_out = tmp_path / "filtered.json"
        assert main([
            "filter", "--config", str(cfg_path),
            "--observations", str(sim_out), "--out", str(filt_out),
        ]) == 0
        filt = json.loads(filt_out.read_text())
        assert len(filt["trials"]) == 4
        entry = filt["trials"][0]
        assert set(entry["loglik"]) == {"hrc", "hmc"}
        assert len(entry["cond_mean"]["hrc"]) == 5
        assert len(entry["map"]["hmc"]) == 5

        det_out = tmp_path / "scored.json"
        assert main([
            "detect", "--config", str(cfg_path),
            "--observations", str(sim_out), "--out", str(det_out),
        ]) == 0
        det = json.loads(det_out.read_text())
        assert len(det["scores"]) == 4
        row = det["scores"][0]
        assert set(row["llr"]) == {"hrc", "hmc"}
        # scoring is llr = alt loglik - null loglik on the same scans
        table = ht.likelihood_table(scans, ht.SingleObsModel(
            epsilon=0.5, noise=ht.NoiseModel(1.0), clutter=ht.ClutterModel.uniform(9)
        ), ht.GridSpec(3, 3))
        cfg = ht.config_from_json(cfg_path.read_text())
        bundle = ht.build_models(cfg)
        res = ht.hrc_filter(bundle.endpoint, bundle.family, table)
        null = ht.null_loglik(scans, bundle.obs_model, bundle.grid)
        assert row["llr"]["hrc"] == pytest.approx(res.loglik - null, abs=1e-12)

    def test_hash_mismatch_rejected(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        sim_out = tmp_path / "sim.json"
        assert main(["simulate", "--config", str(cfg_path), "--out", str(sim_out)]) == 0
        other_cfg = write_config(
            tmp_path, name="other.json",
            observation={"kind": "single", "sigma2": 1.0, "epsilon": 0.25},
        )
        assert main([
            "filter", "--config", str(other_cfg),
            "--observations", str(sim_out), "--out", str(tmp_path / "x.json"),
        ]) == 2
        assert "different configuration" in capsys.readouterr().err

    def test_clutter_hypothesis(self, tmp_path):
        cfg_path = write_config(tmp_path)
        sim_out = tmp_path / "clutter.json"
        assert main([
            "simulate", "--config", str(cfg_path), "--out", str(sim_out),
            "--hypothesis", "clutter",
        ]) == 0
        sim = json.loads(sim_out.read_text())
        assert sim["hypothesis"] == "clutter"
        assert all("path" not in rec for rec in sim["sequences"])

    def test_trials_override(self, tmp_path):
        cfg_path = write_config(tmp_path)
        sim_out = tmp_path / "sim2.json"
        assert main([
            "simulate", "--config", str(cfg_path), "--out", str(sim_out), "--trials", "2",
        ]) == 0
        assert len(json.loads(sim_out.read_text())["sequences"]) == 2


class TestExperimentCommand:
    def test_writes_report_files(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        out_dir = tmp_path / "report"
        assert main(["experiment", "--config", str(cfg_path), "--out", str(out_dir)]) == 0
        stdout = capsys.readouterr().out
        assert "auc[hrc]=" in stdout
        for name in ("roc_hrc.csv", "roc_hmc.csv", "scores.csv", "auc.csv", "summary.json"):
            assert (out_dir / name).exists()

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg_path = write_config(tmp_path)
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        assert main(["experiment", "--config", str(cfg_path), "--out", str(dir_a)]) == 0
        assert main([
            "experiment", "--config", str(cfg_path), "--out", str(dir_b), "--threads", "3",
        ]) == 0
        for name in ("roc_hrc.csv", "roc_hmc.csv", "scores.csv", "auc.csv"):
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()
        sum_a = json.loads((dir_a / "summary.json").read_text())
        sum_b = json.loads((dir_b / "summary.json").read_text())
        for doc in (sum_a, sum_b):
            doc.pop("runtime_seconds")
            doc["config"].pop("threads")
        assert sum_a == sum_b

    def test_seed_override_changes_hash(self, tmp_path):
        cfg_path = write_config(tmp_path)
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        assert main(["experiment", "--config", str(cfg_path), "--out", str(dir_a)]) == 0
        assert main([
            "experiment", "--config", str(cfg_path), "--out", str(dir_b), "--seed", "99",
        ]) == 0
        stamp_a = (dir_a / "auc.csv").read_text().splitlines()[0]
        stamp_b = (dir_b / "auc.csv").read_text().splitlines()[0]
        assert stamp_a != stamp_b
        assert stamp_b.endswith("seed=99")

    def test_filtering_mode(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, mode="filtering", trials=3)
        out_dir = tmp_path / "filt"
        assert main(["experiment", "--config", str(cfg_path), "--out", str(out_dir)]) == 0
        assert "rmse_aps[hrc]=" in capsys.readouterr().out
        assert (out_dir / "rmse_cm.csv").exists()
        assert (out_dir / "rmse_aps.csv").exists()


class TestSweepCommand:
    def test_tiny_alpha_sweep(self, tmp_path):
        cfg_path = write_config(
            tmp_path, trials=4, sweep={"axis": "alpha", "values": [0.0, 1.0]}
        )
        out_dir = tmp_path / "sweep"
        assert main(["sweep", "--config", str(cfg_path), "--out", str(out_dir)]) == 0
        lines = (out_dir / "sweep.csv").read_text().splitlines()
        assert lines[1].split(",")[:2] == ["alpha", "beta"]
        assert len(lines) == 4
        assert (out_dir / "summary.json").exists()

    def test_sweep_without_axis_exits_two(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "x")]) == 2
        assert "sweep" in capsys.readouterr().err


class TestOracleCheck:
    def test_all_checks_pass(self, capsys):
        assert main(["oracle-check"]) == 0
        out = capsys.readouterr().out
        assert "oracle-check: 8/8 checks passed" in out

    def test_verbose_prints_every_line(self, capsys):
        assert main(["oracle-check", "--verbose"]) == 0
        out = capsys.readouterr().out
        assert out.count("ok: ") == 8

    def test_perturbation_is_caught(self, capsys):
        assert main(["oracle-check", "--perturb"]) == 1
        out = capsys.readouterr().out
        assert "FAIL" in out
        summary = out.strip().splitlines()[-1]
        assert summary == "oracle-check: 4/8 checks passed"

    def test_single_suite(self, capsys):
        assert main(["oracle-check", "--suite", "bridge"]) == 0
        assert "2/2 checks passed" in capsys.readouterr().out

    def test_unknown_suite(self, capsys):
        assert main(["oracle-check", "--suite", "everything"]) == 2
        assert "unknown suite" in capsys.readouterr().err

    def test_perturbed_bridge_suite_fails(self, capsys):
        assert main(["oracle-check", "--suite", "bridge", "--perturb"]) == 1
        capsys.readouterr()
