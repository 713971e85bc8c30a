"""Classification metrics, per-SNR accuracy, sweeps, and model statistics.

Evaluation always runs against the persisted split: any overlap between the
test ids and the train/validation ids is a hard error, never a warning.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .dataio import Dataset, Split, SplitSpec, split_dataset
from .errors import ConfigurationError, LeakageError
from .finetune import FinetuneConfig, FinetuneResult, finetune
from .model import BackboneConfig, load_checkpoint


@dataclass
class EvalReport:
    overall_accuracy: float                 # percent, example-averaged
    per_snr_accuracy: dict[int, float]      # snr_db -> percent
    confusion: np.ndarray                   # [c, c] int, rows true / cols predicted
    n_test: int
    model_params: int
    model_flops: int
    class_averaged_accuracy: float          # percent, mean of per-class recalls

    def to_json(self) -> str:
        payload = {
            "overall_accuracy": self.overall_accuracy,
            "class_averaged_accuracy": self.class_averaged_accuracy,
            "per_snr_accuracy": {str(k): v for k, v in sorted(self.per_snr_accuracy.items())},
            "confusion": self.confusion.tolist(),
            "n_test": self.n_test,
            "model_params": self.model_params,
            "model_flops": self.model_flops,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        payload = json.loads(text)
        return cls(
            overall_accuracy=payload["overall_accuracy"],
            class_averaged_accuracy=payload["class_averaged_accuracy"],
            per_snr_accuracy={int(k): v for k, v in payload["per_snr_accuracy"].items()},
            confusion=np.asarray(payload["confusion"], dtype=np.int64),
            n_test=payload["n_test"],
            model_params=payload["model_params"],
            model_flops=payload["model_flops"],
        )


def predict(model: nn.Module, iq: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Argmax class indices for a [N, 2, 128] array; ties go to the lowest index."""
    model.eval()
    out = np.empty(len(iq), dtype=np.int64)
    with torch.inference_mode():
        for lo in range(0, len(iq), batch_size):
            x = torch.from_numpy(np.ascontiguousarray(iq[lo : lo + batch_size], dtype=np.float32))
            logits = model(x.unsqueeze(1)).numpy()
            # np.argmax returns the first maximum, i.e. the lowest class index
            out[lo : lo + len(logits)] = np.argmax(logits, axis=1)
    return out


def evaluate(
    model: nn.Module,
    dataset: Dataset,
    split: Split,
    model_stats_input: tuple[int, int, int, int] = (1, 1, 2, 128),
    batch_size: int = 256,
) -> EvalReport:
    """Score the model on the split's test ids and fill a full report.

    Raises :class:`LeakageError` if any test id also appears in the train or
    validation id lists.
    """
    test_ids = np.asarray(split.test_ids, dtype=np.int64)
    seen = np.union1d(split.train_ids, split.val_ids)
    overlap = np.intersect1d(test_ids, seen)
    if len(overlap):
        raise LeakageError(
            f"{len(overlap)} test ids overlap train/val (first: {overlap[:5].tolist()})"
        )

    labels = dataset.labels[test_ids]
    snrs = dataset.snrs[test_ids]
    preds = predict(model, dataset.iq[test_ids], batch_size=batch_size)

    c = len(dataset.manifest.classes)
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)

    n_test = len(test_ids)
    overall = float(np.trace(confusion)) / n_test * 100.0
    per_snr = {
        int(s): float(np.mean(preds[snrs == s] == labels[snrs == s])) * 100.0
        for s in np.unique(snrs)
    }
    row_sums = confusion.sum(axis=1)
    recalls = np.divide(np.diag(confusion), row_sums, where=row_sums > 0,
                        out=np.zeros(c, dtype=float))
    class_averaged = float(np.mean(recalls[row_sums > 0])) * 100.0

    params, flops = model_stats(model, input_shape=model_stats_input)
    return EvalReport(
        overall_accuracy=overall,
        per_snr_accuracy=per_snr,
        confusion=confusion,
        n_test=n_test,
        model_params=params,
        model_flops=flops,
        class_averaged_accuracy=class_averaged,
    )


def write_report_files(report: EvalReport, out_dir: str | Path) -> None:
    """Emit eval_report.json, accuracy_by_snr.csv, and confusion.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval_report.json").write_text(report.to_json(), encoding="utf-8")
    with open(out_dir / "accuracy_by_snr.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "accuracy"])
        for snr, acc in sorted(report.per_snr_accuracy.items()):
            writer.writerow([snr, f"{acc:.1f}"])
    with open(out_dir / "confusion.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in report.confusion:
            writer.writerow(row.tolist())


# ---------------------------------------------------------------------------
# Model statistics
# ---------------------------------------------------------------------------

def model_stats(model: nn.Module, input_shape=(1, 1, 2, 128)) -> tuple[int, int]:
    """Exact parameter count and analytic flops for one forward pass.

    Flops are counted as 2 x multiply-adds for convolution and linear layers;
    normalization and activation costs are excluded.
    """
    params = sum(p.numel() for p in model.parameters())
    flops = 0
    hooks = []

    def conv_hook(module: nn.Conv2d, _inputs, output):
        nonlocal flops
        kh, kw = module.kernel_size
        per_position = module.in_channels // module.groups * kh * kw
        flops += 2 * output.numel() * per_position

    def linear_hook(module: nn.Linear, _inputs, output):
        nonlocal flops
        flops += 2 * output.numel() * module.in_features

    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            hooks.append(module.register_forward_hook(conv_hook))
        elif isinstance(module, nn.Linear):
            hooks.append(module.register_forward_hook(linear_hook))
    was_training = model.training
    model.eval()
    try:
        with torch.inference_mode():
            model(torch.zeros(*input_shape))
    finally:
        for handle in hooks:
            handle.remove()
        if was_training:
            model.train()
    return params, flops


# ---------------------------------------------------------------------------
# Sample-efficiency sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    fraction: float
    init: str
    seed: int
    accuracy: float  # percent


def training_sample_counts(manifest, fractions, test_fraction=0.20, seed=0) -> list[int]:
    """Train-set sizes produced by the split for each train fraction."""
    return [
        len(split_dataset(manifest, SplitSpec(test_fraction, f, seed)).train_ids)
        for f in fractions
    ]


def sample_efficiency_sweep(
    dataset: Dataset,
    fractions: list[float],
    seeds: list[int],
    finetune_config: FinetuneConfig,
    backbone_config: BackboneConfig | None = None,
    checkpoint: str | Path | dict | None = None,
    inits: tuple[str, ...] = ("ssl_checkpoint", "xavier"),
    test_fraction: float = 0.20,
    split_seed: int = 0,
    out_dir: str | Path | None = None,
    runner=None,
) -> list[SweepRow]:
    """Fresh fine-tune + evaluation per (fraction, init, seed) cell.

    The test carve-out depends only on (split_seed, test_fraction), so every
    run is scored on the same held-out examples.  Results are appended to
    ``sweep.csv`` (fraction, init, seed, accuracy) and pivoted into
    ``sweep_matrix.csv`` with a training-sample-counts row when ``out_dir``
    is given.  ``runner`` may replace the fine-tune+evaluate step in tests.
    """
    if not fractions:
        raise ConfigurationError("fractions must be non-empty")
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ConfigurationError(f"train fraction {f} outside (0, 1]")
    if isinstance(checkpoint, (str, Path)):
        checkpoint = load_checkpoint(checkpoint)
    if "ssl_checkpoint" in inits and checkpoint is None:
        raise ConfigurationError("sweep over ssl_checkpoint init requires a checkpoint")

    rows: list[SweepRow] = []
    for fraction in fractions:
        split = split_dataset(dataset.manifest, SplitSpec(test_fraction, fraction, split_seed))
        for init in inits:
            for seed in seeds:
                if runner is not None:
                    accuracy = runner(fraction, init, seed, split)
                else:
                    cfg = dataclasses.replace(finetune_config, init=init, seed=seed)
                    result: FinetuneResult = finetune(
                        dataset, split.train_ids, split.val_ids, cfg,
                        backbone_config=backbone_config,
                        checkpoint=checkpoint if init == "ssl_checkpoint" else None,
                    )
                    report = evaluate(result.model, dataset, split)
                    accuracy = report.overall_accuracy
                rows.append(SweepRow(fraction=fraction, init=init, seed=seed,
                                     accuracy=accuracy))
    if out_dir is not None:
        write_sweep_files(rows, dataset.manifest, out_dir,
                          test_fraction=test_fraction, split_seed=split_seed)
    return rows


def write_sweep_files(
    rows: list[SweepRow], manifest, out_dir: str | Path,
    test_fraction: float = 0.20, split_seed: int = 0,
) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "init", "seed", "accuracy"])
        for row in rows:
            writer.writerow([row.fraction, row.init, row.seed, f"{row.accuracy:.1f}"])

    fractions = sorted({r.fraction for r in rows})
    inits = sorted({r.init for r in rows})
    counts = training_sample_counts(manifest, fractions, test_fraction, split_seed)
    with open(out_dir / "sweep_matrix.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["init"] + [f"{f:g}" for f in fractions])
        for init in inits:
            cells = []
            for fraction in fractions:
                accs = [r.accuracy for r in rows if r.init == init and r.fraction == fraction]
                cells.append(f"{np.mean(accs):.1f}" if accs else "")
            writer.writerow([init] + cells)
        writer.writerow(["n_train"] + [str(c) for c in counts])
