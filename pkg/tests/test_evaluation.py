"""Metric identities, leakage guard, model statistics, and sweep plumbing."""

import csv

import numpy as np
import pytest
import torch
from torch import nn

from rf_sslkit.dataio import (
    MODULATION_NAMES,
    SNR_GRID,
    Dataset,
    DatasetManifest,
    Split,
    SplitSpec,
    split_dataset,
)
from rf_sslkit.errors import ConfigurationError, LeakageError
from rf_sslkit.evaluation import (
    EvalReport,
    evaluate,
    model_stats,
    predict,
    sample_efficiency_sweep,
    training_sample_counts,
    write_report_files,
)
from rf_sslkit.finetune import FinetuneConfig
from rf_sslkit.model import BackboneConfig, attach_classifier, build_backbone


class _FixedLogits(nn.Module):
    """Constant predictor: same logits for every input."""

    def __init__(self, logits):
        super().__init__()
        self.register_buffer("logits", torch.tensor(logits, dtype=torch.float32))

    def forward(self, x):
        return self.logits.repeat(len(x), 1)


class _PlantedLabelModel(nn.Module):
    """Perfect predictor: reads the label planted at iq[0, 0] by the fixture."""

    def __init__(self, c):
        super().__init__()
        self.c = c

    def forward(self, x):
        planted = x[:, 0, 0, 0]
        classes = torch.arange(self.c, dtype=torch.float32)
        return -((classes[None, :] - planted[:, None]) ** 2)


def _planted_dataset(n_classes=11, snr_grid=(0, 6), epc=10):
    classes = list(MODULATION_NAMES[:n_classes])
    manifest = DatasetManifest(classes=classes, snr_grid=list(snr_grid),
                               examples_per_cell=epc,
                               total=n_classes * len(snr_grid) * epc,
                               storage_paths={}, seed=0)
    labels = np.empty(manifest.total, dtype=np.int64)
    snrs = np.empty(manifest.total, dtype=np.int64)
    iq = np.zeros((manifest.total, 2, 128), dtype=np.float32)
    for cell, (name, snr) in enumerate(manifest.cell_order()):
        lo = cell * epc
        labels[lo : lo + epc] = classes.index(name)
        snrs[lo : lo + epc] = snr
        iq[lo : lo + epc, 0, 0] = classes.index(name)
    return Dataset(iq=iq, labels=labels, snrs=snrs, manifest=manifest)


def _full_split(manifest):
    return split_dataset(manifest, SplitSpec(0.5, 0.5, seed=0))


class TestPredict:
    def test_argmax(self):
        model = _FixedLogits([0.1, 0.9, 0.3])
        out = predict(model, np.zeros((4, 2, 128), dtype=np.float32))
        assert out.tolist() == [1, 1, 1, 1]

    def test_tie_breaks_to_lowest_index(self):
        model = _FixedLogits([0.5, 0.5])
        out = predict(model, np.zeros((3, 2, 128), dtype=np.float32))
        assert out.tolist() == [0, 0, 0]

    def test_batch_order_permutation_equivariance(self):
        dataset = _planted_dataset()
        model = _PlantedLabelModel(11)
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(dataset.iq))
        base = predict(model, dataset.iq)
        assert np.array_equal(base[perm], predict(model, dataset.iq[perm]))


class TestEvaluate:
    def test_perfect_predictor(self):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        report = evaluate(_PlantedLabelModel(11), dataset, split)
        assert report.overall_accuracy == 100.0
        off_diagonal = report.confusion - np.diag(np.diag(report.confusion))
        assert np.all(off_diagonal == 0)
        assert report.n_test == len(split.test_ids)

    def test_constant_predictor_hits_chance_floor_exactly(self):
        dataset = _planted_dataset()  # balanced 11-class test set
        split = _full_split(dataset.manifest)
        report = evaluate(_FixedLogits([1.0] + [0.0] * 10), dataset, split)
        assert report.overall_accuracy == pytest.approx(100.0 / 11, abs=1e-9)

    def test_per_snr_weighted_mean_equals_overall(self):
        dataset = _planted_dataset(snr_grid=(-2, 0, 6))
        split = split_dataset(dataset.manifest, SplitSpec(0.4, 0.5, seed=1))
        rng_model = build_backbone(BackboneConfig("reduced_desk_scale"), seed=3)
        model = attach_classifier(rng_model, 11)
        report = evaluate(model, dataset, split)
        snrs = dataset.snrs[split.test_ids]
        weighted = sum(
            report.per_snr_accuracy[s] * np.sum(snrs == s) for s in report.per_snr_accuracy
        ) / len(split.test_ids)
        assert abs(weighted - report.overall_accuracy) < 1e-9

    def test_confusion_row_sums_match_true_counts(self):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        report = evaluate(_FixedLogits([0.0] * 10 + [1.0]), dataset, split)
        labels = dataset.labels[split.test_ids]
        for k in range(11):
            assert report.confusion[k].sum() == np.sum(labels == k)

    def test_determinism(self):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        model = attach_classifier(build_backbone(BackboneConfig("reduced_desk_scale"),
                                                 seed=5), 11)
        a = evaluate(model, dataset, split)
        b = evaluate(model, dataset, split)
        assert a.overall_accuracy == b.overall_accuracy
        assert np.array_equal(a.confusion, b.confusion)
        assert a.per_snr_accuracy == b.per_snr_accuracy

    def test_leakage_guard_hard_error(self):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        poisoned = Split(
            train_ids=np.concatenate([split.train_ids, split.test_ids[:3]]),
            val_ids=split.val_ids, test_ids=split.test_ids,
            spec=split.spec, total=split.total,
        )
        with pytest.raises(LeakageError):
            evaluate(_PlantedLabelModel(11), dataset, poisoned)

    def test_label_shuffled_model_near_chance_floor(self):
        # chance floor: prediction independent of the (shuffled) labels
        dataset = _planted_dataset(epc=20)
        rng = np.random.default_rng(0)
        hits = 0
        for seed in (0, 1, 2):
            shuffled = Dataset(
                iq=dataset.iq,
                labels=rng.permutation(dataset.labels),
                snrs=dataset.snrs, manifest=dataset.manifest,
            )
            split = _full_split(dataset.manifest)
            report = evaluate(_PlantedLabelModel(11), shuffled, split)
            hits += abs(report.overall_accuracy - 100.0 / 11) <= 1.5
        assert hits >= 2

    def test_report_json_roundtrip(self):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        report = evaluate(_PlantedLabelModel(11), dataset, split)
        clone = EvalReport.from_json(report.to_json())
        assert clone.overall_accuracy == report.overall_accuracy
        assert np.array_equal(clone.confusion, report.confusion)
        assert clone.per_snr_accuracy == report.per_snr_accuracy

    def test_report_files_written(self, tmp_path):
        dataset = _planted_dataset()
        split = _full_split(dataset.manifest)
        report = evaluate(_PlantedLabelModel(11), dataset, split)
        write_report_files(report, tmp_path)
        assert (tmp_path / "eval_report.json").exists()
        with open(tmp_path / "accuracy_by_snr.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["snr_db", "accuracy"]
        assert len(rows) == 1 + 2  # header + one row per SNR
        assert rows[1][1] == "100.0"
        with open(tmp_path / "confusion.csv") as fh:
            assert len(list(csv.reader(fh))) == 11


class TestModelStats:
    def test_single_linear_layer_closed_form(self):
        layer = nn.Linear(37, 11)
        params, flops = model_stats(layer, input_shape=(1, 37))
        assert params == 37 * 11 + 11
        assert flops == 2 * 37 * 11

    def test_single_conv_layer_closed_form(self):
        conv = nn.Conv2d(1, 4, kernel_size=(2, 3), stride=1, padding=0, bias=False)
        params, flops = model_stats(conv, input_shape=(1, 1, 2, 128))
        out_positions = 1 * 126 * 4
        assert params == 4 * 1 * 2 * 3
        assert flops == 2 * out_positions * (1 * 2 * 3)

    def test_reduced_model_stats_are_stable(self):
        model = attach_classifier(build_backbone(BackboneConfig("reduced_desk_scale"),
                                                 seed=0), 4)
        params, flops = model_stats(model)
        params2, flops2 = model_stats(model)
        assert (params, flops) == (params2, flops2)
        assert params == sum(p.numel() for p in model.parameters())
        assert flops > 0


class TestSweep:
    def test_row_count_and_csv_shape(self, tmp_path):
        dataset = _planted_dataset(n_classes=2, epc=20)

        def runner(fraction, init, seed, split):
            return 50.0 + seed

        rows = sample_efficiency_sweep(
            dataset, fractions=[0.25, 0.5], seeds=[0, 1],
            finetune_config=FinetuneConfig(init="xavier"),
            inits=("xavier",), runner=runner, out_dir=tmp_path,
        )
        assert len(rows) == 2 * 1 * 2
        with open(tmp_path / "sweep.csv") as fh:
            table = list(csv.reader(fh))
        assert table[0] == ["fraction", "init", "seed", "accuracy"]
        assert len(table) == 1 + 4
        with open(tmp_path / "sweep_matrix.csv") as fh:
            matrix = list(csv.reader(fh))
        assert matrix[0] == ["init", "0.25", "0.5"]
        assert matrix[-1][0] == "n_train"

    def test_single_cell_sweep(self):
        dataset = _planted_dataset(n_classes=2, epc=20)
        rows = sample_efficiency_sweep(
            dataset, fractions=[0.5], seeds=[7],
            finetune_config=FinetuneConfig(init="xavier"),
            inits=("xavier",), runner=lambda *a: 42.0,
        )
        assert len(rows) == 1
        assert rows[0].seed == 7 and rows[0].accuracy == 42.0

    def test_ssl_init_requires_checkpoint(self):
        dataset = _planted_dataset(n_classes=2, epc=20)
        with pytest.raises(ConfigurationError):
            sample_efficiency_sweep(
                dataset, fractions=[0.5], seeds=[0],
                finetune_config=FinetuneConfig(),
                inits=("ssl_checkpoint",),
            )

    def test_full_scale_training_counts_row(self):
        manifest = DatasetManifest(classes=list(MODULATION_NAMES),
                                   snr_grid=list(SNR_GRID), examples_per_cell=1000,
                                   total=220000, storage_paths={}, seed=0)
        counts = training_sample_counts(
            manifest, [0.005, 0.01, 0.05, 0.10, 0.50, 0.75, 0.90])
        assert counts == [880, 1760, 8800, 17600, 88000, 132000, 158400]
