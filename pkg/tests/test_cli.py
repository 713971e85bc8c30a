"""Subcommand pipeline, config validation, exit codes, and figure emission."""

import json

import numpy as np
import pytest

from rf_sslkit.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_LEAKAGE,
    EXIT_OK,
    config_hash,
    default_config,
    load_config,
    main,
    validate_config,
)
from rf_sslkit.evaluation import EvalReport, SweepRow
from rf_sslkit.plots import efficiency_points, plot_reports, plot_sample_efficiency, snr_series


@pytest.fixture
def tiny_config(tmp_path):
    config = {
        "seed": 3,
        "output_dir": str(tmp_path / "runs"),
        "dataset": {
            "classes": ["BPSK", "QPSK"],
            "snr_grid": [0, 12],
            "examples_per_cell": 8,
            "test_fraction": 0.25,
        },
        "model": {"variant": "reduced_desk_scale", "projection_width": 256},
        "ssl": {"epochs": 1, "batch_size": 8},
        "finetune": {"max_epochs": 2, "batch_size": 8},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def _single_run_dir(root):
    runs = sorted(p for p in root.iterdir() if p.is_dir())
    assert len(runs) >= 1
    return runs[-1]


class TestConfigValidation:
    def test_defaults_are_valid(self):
        assert validate_config(default_config()) == []

    def test_all_violations_reported_at_once(self):
        config = default_config()
        config["nonsense"] = 1
        config["ssl"]["tau"] = -2.0
        config["finetune"]["mode"] = "warmup"
        config["dataset"]["classes"] = ["BPSK", "NOPE"]
        errors = validate_config(config)
        assert len(errors) == 4
        text = "\n".join(errors)
        for fragment in ("nonsense", "tau", "mode", "NOPE"):
            assert fragment in text

    def test_unknown_section_key_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"augment": {"frequency_offset_range": [0, 1]}}))
        from rf_sslkit.errors import ConfigurationError

        with pytest.raises(ConfigurationError, match="frequency_offset_range"):
            load_config(path)

    def test_default_dataset_section_is_full_grid(self):
        ds = default_config()["dataset"]
        total = len(ds["classes"]) * len(ds["snr_grid"]) * ds["examples_per_cell"]
        assert total == 220000

    def test_config_hash_stable_under_key_order(self):
        a = {"seed": 1, "dataset": {"source": "generate"}}
        b = {"dataset": {"source": "generate"}, "seed": 1}
        assert config_hash(a) == config_hash(b)

    def test_bad_json_is_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["--config", str(path), "generate"]) == EXIT_CONFIG


class TestPipeline:
    def test_generate_split_pretrain_finetune_evaluate_plot(self, tiny_config, tmp_path):
        runs = tmp_path / "runs"

        assert main(["--config", str(tiny_config), "generate"]) == EXIT_OK
        gen_dir = _single_run_dir(runs)
        dataset_dir = gen_dir / "dataset"
        assert (dataset_dir / "manifest.json").exists()
        assert (gen_dir / "config.json").exists()  # resolved snapshot
        manifest = json.loads((dataset_dir / "manifest.json").read_text())
        assert manifest["total"] == 2 * 2 * 8

        assert main(["--config", str(tiny_config), "split",
                     "--dataset", str(dataset_dir), "--train-fraction", "0.5"]) == EXIT_OK
        split_dir = _single_run_dir(runs)
        splits = split_dir / "splits.json"
        assert splits.exists()

        assert main(["--config", str(tiny_config), "pretrain",
                     "--dataset", str(dataset_dir), "--splits", str(splits),
                     "--epochs", "1"]) == EXIT_OK
        pre_dir = _single_run_dir(runs)
        assert (pre_dir / "pretrain_metrics.jsonl").exists()
        ckpt = pre_dir / "checkpoint_final"
        assert (ckpt / "weights.bin").exists()

        assert main(["--config", str(tiny_config), "finetune",
                     "--dataset", str(dataset_dir), "--splits", str(splits),
                     "--init", "ssl", "--checkpoint", str(ckpt),
                     "--max-epochs", "2"]) == EXIT_OK
        ft_dir = _single_run_dir(runs)
        assert (ft_dir / "finetune_metrics.jsonl").exists()
        ft_ckpt = ft_dir / "checkpoint_best"

        assert main(["--config", str(tiny_config), "evaluate",
                     "--dataset", str(dataset_dir), "--splits", str(splits),
                     "--checkpoint", str(ft_ckpt)]) == EXIT_OK
        ev_dir = _single_run_dir(runs)
        report_path = ev_dir / "eval_report.json"
        assert report_path.exists()
        assert (ev_dir / "accuracy_by_snr.csv").exists()
        assert (ev_dir / "confusion.csv").exists()
        report = EvalReport.from_json(report_path.read_text())
        assert len(report.per_snr_accuracy) == 2

        assert main(["--config", str(tiny_config), "plot",
                     "--reports", f"run1={report_path}"]) == EXIT_OK
        plot_dir = _single_run_dir(runs)
        assert (plot_dir / "accuracy_vs_snr.svg").exists()
        assert (plot_dir / "accuracy_vs_snr.png").exists()

    def test_finetune_xavier_via_train_fraction(self, tiny_config, tmp_path):
        runs = tmp_path / "runs"
        assert main(["--config", str(tiny_config), "generate"]) == EXIT_OK
        dataset_dir = _single_run_dir(runs) / "dataset"
        assert main(["--config", str(tiny_config), "finetune",
                     "--dataset", str(dataset_dir), "--train-fraction", "0.5",
                     "--init", "xavier", "--max-epochs", "1"]) == EXIT_OK
        ft_dir = _single_run_dir(runs)
        assert (ft_dir / "splits.json").exists()  # derived split persisted

    def test_sweep_writes_expected_rows(self, tiny_config, tmp_path):
        runs = tmp_path / "runs"
        assert main(["--config", str(tiny_config), "generate"]) == EXIT_OK
        dataset_dir = _single_run_dir(runs) / "dataset"
        assert main(["--config", str(tiny_config), "sweep",
                     "--dataset", str(dataset_dir),
                     "--fractions", "0.25,0.5", "--seeds", "0",
                     "--inits", "xavier", "--max-epochs", "1"]) == EXIT_OK
        sweep_dir = _single_run_dir(runs)
        lines = (sweep_dir / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 2 * 1 * 1  # header + fractions x inits x seeds
        assert main(["--config", str(tiny_config), "plot",
                     "--sweep", str(sweep_dir / "sweep.csv")]) == EXIT_OK
        plot_dir = _single_run_dir(runs)
        assert (plot_dir / "sample_efficiency.svg").exists()


class TestExitCodes:
    def test_config_error_lists_all_violations(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"junk": 1, "ssl": {"tau": -1}}))
        assert main(["--config", str(bad), "generate"]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "junk" in err and "tau" in err

    def test_missing_dataset_is_data_error(self, tiny_config, tmp_path):
        assert main(["--config", str(tiny_config), "split",
                     "--dataset", str(tmp_path / "nowhere"),
                     "--train-fraction", "0.5"]) == EXIT_DATA

    def test_leakage_guard_exit_code(self, tiny_config, tmp_path):
        runs = tmp_path / "runs"
        assert main(["--config", str(tiny_config), "generate"]) == EXIT_OK
        dataset_dir = _single_run_dir(runs) / "dataset"
        assert main(["--config", str(tiny_config), "split",
                     "--dataset", str(dataset_dir), "--train-fraction", "0.5"]) == EXIT_OK
        split_path = _single_run_dir(runs) / "splits.json"
        payload = json.loads(split_path.read_text())
        payload["train_ids"] = sorted(set(payload["train_ids"]) | set(payload["test_ids"][:2]))
        tampered = tmp_path / "tampered.json"
        tampered.write_text(json.dumps(payload))

        assert main(["--config", str(tiny_config), "pretrain",
                     "--dataset", str(dataset_dir), "--epochs", "1"]) == EXIT_OK
        ckpt = _single_run_dir(runs) / "checkpoint_final"
        assert main(["--config", str(tiny_config), "finetune",
                     "--dataset", str(dataset_dir), "--splits", str(split_path),
                     "--init", "ssl", "--checkpoint", str(ckpt),
                     "--max-epochs", "1"]) == EXIT_OK
        ft_ckpt = _single_run_dir(runs) / "checkpoint_best"
        assert main(["--config", str(tiny_config), "evaluate",
                     "--dataset", str(dataset_dir), "--splits", str(tampered),
                     "--checkpoint", str(ft_ckpt)]) == EXIT_LEAKAGE

    def test_output_env_var_used_as_default_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RF_SSLKIT_OUTPUT", str(tmp_path / "envruns"))
        config = tmp_path / "c.json"
        config.write_text(json.dumps({
            "dataset": {"classes": ["BPSK"], "snr_grid": [0], "examples_per_cell": 2},
        }))
        assert main(["--config", str(config), "generate"]) == EXIT_OK
        assert (tmp_path / "envruns").exists()


class TestPlots:
    @staticmethod
    def _report(per_snr):
        c = 2
        return EvalReport(
            overall_accuracy=float(np.mean(list(per_snr.values()))),
            per_snr_accuracy=per_snr, confusion=np.zeros((c, c), dtype=np.int64),
            n_test=10, model_params=1, model_flops=1,
            class_averaged_accuracy=0.0,
        )

    def test_snr_series_single_report_has_20_points(self):
        per_snr = {snr: 50.0 for snr in range(-20, 20, 2)}
        union, series = snr_series([("a", self._report(per_snr))])
        assert len(union) == 20
        assert len(series["a"]) == 20

    def test_disjoint_grids_union_with_gaps(self):
        a = self._report({0: 10.0, 4: 20.0})
        b = self._report({2: 30.0, 6: 40.0})
        union, series = snr_series([("a", a), ("b", b)])
        assert union == [0, 2, 4, 6]
        assert np.isnan(series["a"][1]) and np.isnan(series["a"][3])
        assert np.isnan(series["b"][0]) and np.isnan(series["b"][2])
        assert series["a"][0] == 10.0 and series["b"][3] == 40.0

    def test_plot_files_deterministic_names(self, tmp_path):
        paths = plot_reports([("a", self._report({0: 10.0}))], tmp_path)
        assert [p.name for p in paths] == ["accuracy_vs_snr.svg", "accuracy_vs_snr.png"]
        assert all(p.exists() for p in paths)

    def test_efficiency_points_14_for_7x2(self, tmp_path):
        rows = [
            SweepRow(fraction=f, init=init, seed=s, accuracy=50.0 + s)
            for f in (0.005, 0.01, 0.05, 0.1, 0.5, 0.75, 0.9)
            for init in ("ssl", "xavier")
            for s in (0, 1)
        ]
        points = efficiency_points(rows)
        assert sum(len(v) for v in points.values()) == 14
        assert points["ssl"][0][1] == pytest.approx(50.5)  # seed average
        paths = plot_sample_efficiency(rows, tmp_path)
        assert all(p.exists() for p in paths)

    def test_empty_inputs_rejected(self, tmp_path):
        from rf_sslkit.errors import ConfigurationError

        with pytest.raises(ConfigurationError):
            snr_series([])
        with pytest.raises(ConfigurationError):
            plot_sample_efficiency([], tmp_path)
