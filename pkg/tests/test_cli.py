import json

import numpy as np
import pytest

from qntk_diagnostics import cli, serialize


def write_config(tmp_path, name="config.json", **overrides):
    config = {
        "command": "diagnose",
        "model": {
            "n_qubits": 2,
            "layers": 2,
            "encoding": "high_freq",
            "ansatz": "HEA",
            "n_outputs": 1,
            "input_dim": 1,
        },
        "dataset": {"kind": "sinusoid", "n_points": 8, "seed": 3},
        "seeds": [0],
    }
    config.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def run(config_path, out_dir, *extra):
    return cli.main(["--config", config_path, "--out", str(out_dir), *extra])


class TestDiagnoseCommand:
    def test_tfim_example_emits_one_row(self, tmp_path):
        config = write_config(
            tmp_path,
            model={
                "n_qubits": 4,
                "layers": 5,
                "encoding": "low_freq",
                "ansatz": "HVA",
                "n_outputs": 1,
                "input_dim": 1,
            },
            dataset={"kind": "tfim", "split_seed": 0},
        )
        out = tmp_path / "run"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "diagnostics.csv")
        assert header == ["seed", "lambda_min", "lambda_max", "kappa", "eta_crit", "tau"]
        assert len(rows) == 1
        kappa = float(rows[0][3])
        assert kappa >= 1.0
        assert (out / "manifest.json").exists()
        assert (out / "kernel_seed0.csv").exists()

    def test_kernel_csv_uses_merged_index_header(self, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "run"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "kernel_seed0.csv")
        assert header == [f"{i}.0" for i in range(4)]
        assert len(rows) == 4


class TestDatasetCommand:
    def test_writes_csv_and_sidecar(self, tmp_path):
        config = write_config(tmp_path, command="dataset")
        out = tmp_path / "data"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "dataset.csv")
        assert header == ["feature_0", "label_0", "is_train"]
        assert len(rows) == 8
        sidecar = json.loads((out / "dataset.json").read_text())
        assert sidecar["provenance"]["generator"] == "sinusoid"


class TestConfigValidation:
    def test_malformed_key_exits_2_without_outputs(self, tmp_path):
        config = write_config(tmp_path, bogus_key=1)
        out = tmp_path / "never"
        assert run(config, out) == 2
        assert not out.exists()

    def test_unknown_command_is_config_error(self, tmp_path):
        config = write_config(tmp_path, command="explode")
        assert run(config, tmp_path / "x") == 2

    def test_unreadable_config(self, tmp_path):
        assert run(str(tmp_path / "missing.json"), tmp_path / "x") == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        assert run(str(path), tmp_path / "x") == 2

    def test_bad_model_section(self, tmp_path):
        config = write_config(
            tmp_path,
            model={"n_qubits": 2, "layers": 2, "encoding": "mid_freq", "ansatz": "HEA"},
        )
        assert run(config, tmp_path / "x") == 2

    def test_seeds_flag_override(self, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "run"
        assert run(config, out, "--seeds", "1,2") == 0
        _, rows = serialize.read_csv(out / "diagnostics.csv")
        assert [r[0] for r in rows] == ["1", "2"]


class TestTrainCommand:
    def test_writes_training_and_logs(self, tmp_path):
        config = write_config(
            tmp_path,
            command="train",
            train={"max_epochs": 15},
            eta_mode={"mode": "fraction", "value": 0.5},
        )
        out = tmp_path / "run"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "training.csv")
        assert header == ["seed", "epochs", "final_loss", "rel_param_change"]
        assert len(rows) == 1
        header, rows = serialize.read_csv(out / "trainlog_seed0.csv")
        assert header == ["epoch", "loss", "step_norm"]
        summary = json.loads((out / "trainlog_seed0.json").read_text())
        assert set(summary) == {"converged", "epochs_run", "final_loss", "relative_param_change"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert "0" in manifest["resolved_eta"]


class TestCompareCommand:
    def test_stress_rate_flags_non_convergence(self, tmp_path):
        config = write_config(
            tmp_path,
            command="compare",
            model={
                "n_qubits": 2,
                "layers": 2,
                "encoding": "high_freq",
                "ansatz": "HEA",
                "n_outputs": 1,
                "input_dim": 1,
            },
            dataset={"kind": "sinusoid", "n_points": 8, "seed": 3},
            train={"max_epochs": 250},
            eta_mode={"mode": "fraction", "value": 10.0},
        )
        out = tmp_path / "run"
        assert run(config, out) == 0
        report = json.loads((out / "report.json").read_text())
        result = report["results"][0]
        assert result["status"] == "ok"
        assert result["converged"] is False
        for name in ("report.json", "diagnostics.csv", "training.csv", "predictions.csv",
                     "dataset.csv", "manifest.json"):
            assert (out / name).exists()

    def test_predictions_schema(self, tmp_path):
        config = write_config(
            tmp_path,
            command="compare",
            train={"max_epochs": 10},
            eta_mode={"mode": "fraction", "value": 0.5},
        )
        out = tmp_path / "run"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "predictions.csv")
        assert header == ["x", "qntk_mean", "qntk_std", "qnn_mean", "qnn_std"]
        assert len(rows) == 100


class TestFourierCommand:
    def test_writes_spectrum(self, tmp_path):
        config = write_config(
            tmp_path,
            command="fourier",
            seeds=[0, 1],
            fourier={"grid_size": 32},
        )
        out = tmp_path / "run"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "spectrum.csv")
        assert header == ["omega", "mean_abs_coeff"]
        assert len(rows) == 32


class TestSweepCommand:
    def test_two_depths_produce_subdirs_and_aggregates(self, tmp_path):
        config = write_config(
            tmp_path,
            command="sweep",
            layers_list=[1, 2],
            train={"max_epochs": 8},
            eta_mode={"mode": "fraction", "value": 0.5},
        )
        out = tmp_path / "sweep"
        assert run(config, out) == 0
        header, rows = serialize.read_csv(out / "diagnostics.csv")
        assert header == [
            "layers", "seed", "lambda_min", "lambda_max", "kappa", "eta_crit", "tau", "r2_qntk",
        ]
        assert [r[0] for r in rows] == ["1", "2"]
        header, rows = serialize.read_csv(out / "training.csv")
        assert header == ["layers", "seed", "epochs", "final_loss", "rel_param_change", "aad"]
        assert (out / "L1" / "report.json").exists()
        assert (out / "L2" / "predictions.csv").exists()

    def test_worker_pool_matches_sequential(self, tmp_path, monkeypatch):
        config = write_config(
            tmp_path,
            command="sweep",
            layers_list=[1, 2],
            train={"max_epochs": 5},
            eta_mode={"mode": "fraction", "value": 0.5},
        )
        out_seq = tmp_path / "seq"
        assert run(config, out_seq) == 0
        monkeypatch.setenv("QNTK_THREADS", "2")
        out_par = tmp_path / "par"
        assert run(config, out_par) == 0
        assert (out_seq / "diagnostics.csv").read_bytes() == (out_par / "diagnostics.csv").read_bytes()
        assert (out_seq / "training.csv").read_bytes() == (out_par / "training.csv").read_bytes()


class TestDeterminism:
    def test_reruns_are_byte_identical(self, tmp_path):
        config = write_config(
            tmp_path,
            command="compare",
            train={"max_epochs": 10},
            eta_mode={"mode": "fraction", "value": 0.5},
            seeds=[0, 1],
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(config, out_a) == 0
        assert run(config, out_b) == 0
        for name in ("diagnostics.csv", "training.csv", "predictions.csv", "dataset.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestResolveEta:
    def test_cli_surface(self):
        from qntk_diagnostics import qntk

        diag = qntk.diagnostics(qntk.bundle_from_matrix(np.diag([1.0, 4.0])))
        assert cli.resolve_eta("crit", None, diag) == pytest.approx(0.5)
        assert cli.resolve_eta("fraction", 0.1, diag) == pytest.approx(0.05)
        assert cli.resolve_eta("fraction", 10.0, diag) == pytest.approx(5.0)
        assert cli.resolve_eta("absolute", 0.25, None) == 0.25
