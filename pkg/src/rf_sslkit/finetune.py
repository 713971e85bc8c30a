"""Supervised classifier training from an SSL or Xavier initialization.

The optimization protocol: AdamW at lr 0.01, validation loss evaluated on
the full validation split after every epoch, learning rate halved after 5
epochs without improvement, training stopped after 20 epochs without
improvement or at the epoch cap, and the parameters with the best validation
loss returned.  "Improvement" means a validation loss lower than the best
seen by at least 1e-6.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .dataio import Dataset
from .errors import ConfigurationError, DataError, TrainingDivergedError
from .model import (
    BackboneConfig,
    Classifier,
    attach_classifier,
    build_backbone,
    load_checkpoint,
    save_checkpoint,
    xavier_init_model,
)

_MASK64 = (1 << 64) - 1

MODES = ("end_to_end", "linear_probe")
INITS = ("ssl_checkpoint", "xavier")


@dataclass
class FinetuneConfig:
    max_epochs: int = 500
    lr: float = 0.01
    lr_halving_patience: int = 5
    early_stop_patience: int = 20
    batch_size: int = 400
    mode: str = "end_to_end"
    init: str = "ssl_checkpoint"
    seed: int = 0
    improvement_threshold: float = 1e-6
    weight_decay: float = 0.01

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.init not in INITS:
            raise ConfigurationError(f"init must be one of {INITS}, got {self.init!r}")
        if self.early_stop_patience <= self.lr_halving_patience:
            raise ConfigurationError("early_stop_patience must exceed lr_halving_patience")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("max_epochs and batch_size must be >= 1")


# ---------------------------------------------------------------------------
# Cross-entropy primitive
# ---------------------------------------------------------------------------

PROBABILITY_FLOOR = 1e-12


class _ClampCounter:
    """Counts how often a zero predicted probability had to be floored."""

    def __init__(self) -> None:
        self.count = 0

    def bump(self) -> None:
        self.count += 1
        if self.count == 1:
            warnings.warn(
                "true-class probability of 0 clamped to 1e-12 in cross_entropy",
                RuntimeWarning,
                stacklevel=3,
            )


CLAMP_COUNTER = _ClampCounter()


@dataclass
class ClassProbabilities:
    """A predicted distribution p over c classes and the one-hot truth beta."""

    p: np.ndarray
    beta: np.ndarray

    def validate(self) -> None:
        p = np.asarray(self.p, dtype=float)
        beta = np.asarray(self.beta)
        if p.shape != beta.shape or p.ndim != 1:
            raise ValueError(f"p and beta must be 1-D and aligned, got {p.shape}, {beta.shape}")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {p.sum()}, expected 1 within 1e-6")
        if sorted(np.unique(beta).tolist()) not in ([0, 1], [1]):
            raise ValueError("beta must be a one-hot indicator")
        if int(beta.sum()) != 1:
            raise ValueError("beta must have exactly one 1")


def cross_entropy(probs: ClassProbabilities) -> float:
    """-sum_i beta_i log p_i, with the true-class probability floored at 1e-12."""
    probs.validate()
    p_true = float(np.asarray(probs.p, dtype=float)[np.argmax(probs.beta)])
    if p_true < PROBABILITY_FLOOR:
        CLAMP_COUNTER.bump()
        p_true = PROBABILITY_FLOOR
    return -float(np.log(p_true))


# ---------------------------------------------------------------------------
# Plateau halving and early stopping (pure functions of the loss history)
# ---------------------------------------------------------------------------

class _PatienceCounter:
    def __init__(self, patience: int, threshold: float = 1e-6):
        self.patience = patience
        self.threshold = threshold
        self.best = float("inf")
        self.stale = 0

    def update(self, value: float) -> bool:
        """Feed one epoch's validation loss; True when patience is exhausted."""
        if value <= self.best - self.threshold or self.best == float("inf"):
            self.best = value
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


class PlateauHalver(_PatienceCounter):
    """Signals a halving after ``patience`` consecutive stagnant epochs.

    The stagnation counter restarts after each halving event.
    """

    def __init__(self, patience: int = 5, threshold: float = 1e-6):
        super().__init__(patience, threshold)

    def update(self, value: float) -> bool:
        fire = super().update(value)
        if fire:
            self.stale = 0
        return fire


class EarlyStopper(_PatienceCounter):
    """Signals a stop after ``patience`` consecutive stagnant epochs."""

    def __init__(self, patience: int = 20, threshold: float = 1e-6):
        super().__init__(patience, threshold)


@dataclass
class ScheduleTrace:
    lrs: list[float]
    halving_epochs: list[int]
    stop_epoch: int | None
    best_epoch: int


def simulate_schedule(
    history: list[float],
    lr: float = 0.01,
    halving_patience: int = 5,
    stop_patience: int = 20,
    threshold: float = 1e-6,
) -> ScheduleTrace:
    """Replay the scheduler/early-stop state machine over a scripted history.

    Epochs are 1-based.  ``lrs[i]`` is the learning rate in force after
    processing epoch i+1.  Best epoch is the global minimum, earliest on ties.
    """
    halver = PlateauHalver(halving_patience, threshold)
    stopper = EarlyStopper(stop_patience, threshold)
    lrs: list[float] = []
    halvings: list[int] = []
    stop_epoch = None
    best_epoch, best_val = 0, float("inf")
    for epoch, value in enumerate(history, start=1):
        if value < best_val:
            best_val, best_epoch = value, epoch
        if halver.update(value):
            lr *= 0.5
            halvings.append(epoch)
        lrs.append(lr)
        if stopper.update(value):
            stop_epoch = epoch
            break
    return ScheduleTrace(lrs=lrs, halving_epochs=halvings, stop_epoch=stop_epoch,
                         best_epoch=best_epoch)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

@dataclass
class FinetuneResult:
    model: Classifier
    history: list[dict]
    best_epoch: int
    best_val_loss: float
    stopped_early: bool
    checkpoint_dir: Path | None = None
    best_checkpoint_dir: Path | None = None


def _as_input(iq: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(iq, dtype=np.float32)).unsqueeze(1)


def _validation_pass(model, iq, labels, batch_size) -> tuple[float, float]:
    model.eval()
    total_loss, correct = 0.0, 0
    with torch.inference_mode():
        for lo in range(0, len(iq), batch_size):
            x = _as_input(iq[lo : lo + batch_size])
            y = torch.from_numpy(labels[lo : lo + batch_size])
            logits = model(x)
            total_loss += float(F.cross_entropy(logits, y, reduction="sum"))
            correct += int((logits.argmax(dim=1) == y).sum())
    return total_loss / len(iq), correct / len(iq)


def _build_model(
    backbone_config: BackboneConfig,
    n_classes: int,
    config: FinetuneConfig,
    checkpoint: dict | None,
) -> tuple[Classifier, Path | None]:
    rng = np.random.default_rng([config.seed & _MASK64, 2])
    parent = None
    backbone = build_backbone(backbone_config, seed=config.seed)
    model = attach_classifier(backbone, n_classes)
    if config.init == "ssl_checkpoint":
        if checkpoint is None:
            raise ConfigurationError("init='ssl_checkpoint' requires a checkpoint")
        ckpt_backbone_cfg: BackboneConfig = checkpoint["backbone_config"]
        if ckpt_backbone_cfg.variant != backbone_config.variant:
            raise ConfigurationError(
                f"checkpoint variant {ckpt_backbone_cfg.variant!r} does not match "
                f"requested {backbone_config.variant!r}"
            )
        model.backbone.load_state_dict(checkpoint["state"]["backbone"])
        # fresh classification head replaces the SSL projection/prediction heads
        with torch.no_grad():
            from .model import xavier_init

            model.fc.weight.copy_(
                xavier_init(model.fc.weight.shape, model.fc.in_features, model.fc.out_features, rng)
            )
            model.fc.bias.zero_()
        parent = checkpoint.get("path")
    else:
        xavier_init_model(model, rng)
    return model, parent


def finetune(
    dataset: Dataset,
    train_ids: np.ndarray,
    val_ids: np.ndarray,
    config: FinetuneConfig,
    backbone_config: BackboneConfig | None = None,
    checkpoint: str | Path | dict | None = None,
    out_dir: str | Path | None = None,
) -> FinetuneResult:
    """Train the classifier; returns the parameters with the best validation loss.

    ``checkpoint`` may be a checkpoint directory or an already-loaded
    checkpoint dict.  In ``linear_probe`` mode the backbone is frozen
    (parameters and batch-norm statistics stay bit-identical) and only the
    classification head trains.
    """
    config.validate()
    train_ids = np.asarray(train_ids, dtype=np.int64)
    val_ids = np.asarray(val_ids, dtype=np.int64)
    if len(train_ids) == 0:
        raise DataError("train set is empty")
    if len(val_ids) == 0:
        raise DataError("validation set is empty")

    if isinstance(checkpoint, (str, Path)):
        checkpoint = load_checkpoint(checkpoint)
    if backbone_config is None:
        if checkpoint is not None:
            backbone_config = checkpoint["backbone_config"]
        else:
            raise ConfigurationError("backbone_config is required without a checkpoint")

    n_classes = len(dataset.manifest.classes)
    torch.manual_seed(config.seed & _MASK64)
    model, parent = _build_model(backbone_config, n_classes, config, checkpoint)

    if config.mode == "linear_probe":
        for p in model.backbone.parameters():
            p.requires_grad_(False)
        trainable = list(model.fc.parameters())
    else:
        trainable = list(model.parameters())
    optimizer = torch.optim.AdamW(trainable, lr=config.lr, weight_decay=config.weight_decay)

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "finetune_metrics.jsonl" if out_dir is not None else None
    if metrics_path is not None and metrics_path.exists():
        metrics_path.unlink()

    val_iq = dataset.iq[val_ids]
    val_labels = dataset.labels[val_ids]
    shuffle_rng = np.random.default_rng([config.seed & _MASK64, 3])
    halver = PlateauHalver(config.lr_halving_patience, config.improvement_threshold)
    stopper = EarlyStopper(config.early_stop_patience, config.improvement_threshold)

    history: list[dict] = []
    best_epoch, best_val = 0, float("inf")
    best_state: dict | None = None
    stopped_early = False
    for epoch in range(1, config.max_epochs + 1):
        model.train()
        if config.mode == "linear_probe":
            model.backbone.eval()  # keep batch-norm statistics frozen
        order = shuffle_rng.permutation(len(train_ids))
        train_loss_sum = 0.0
        for lo in range(0, len(order), config.batch_size):
            ids = train_ids[order[lo : lo + config.batch_size]]
            x = _as_input(dataset.iq[ids])
            y = torch.from_numpy(dataset.labels[ids])
            logits = model(x)
            loss = F.cross_entropy(logits, y)
            if not torch.isfinite(loss):
                if out_dir is not None:
                    (out_dir / "divergence_snapshot.json").write_text(json.dumps({
                        "stage": "finetune", "epoch": epoch,
                        "loss": float(loss.detach()),
                        "history": history[-5:],
                    }, indent=2), encoding="utf-8")
                raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            train_loss_sum += float(loss.detach()) * len(ids)
        train_loss = train_loss_sum / len(train_ids)

        val_loss, val_acc = _validation_pass(model, val_iq, val_labels, config.batch_size)
        if halver.update(val_loss):
            for group in optimizer.param_groups:
                group["lr"] *= 0.5
        lr_now = optimizer.param_groups[0]["lr"]
        history.append({
            "epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
            "val_accuracy": val_acc, "lr": lr_now,
        })
        if metrics_path is not None:
            with open(metrics_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(history[-1]) + "\n")

        if val_loss < best_val:  # strict: earliest epoch wins ties
            best_val, best_epoch = val_loss, epoch
            best_state = copy.deepcopy(model.state_dict())
        if stopper.update(val_loss):
            stopped_early = True
            break

    if best_state is not None:
        model.load_state_dict(best_state)

    final_dir = best_dir = None
    if out_dir is not None:
        best_dir = save_checkpoint(
            out_dir / "checkpoint_best",
            {"backbone": model.backbone.state_dict(), "classifier": model.fc.state_dict()},
            backbone_config, None, stage="finetune", seed=config.seed,
            epoch=best_epoch, parent=parent,
        )
        final_dir = best_dir
    return FinetuneResult(
        model=model, history=history, best_epoch=best_epoch, best_val_loss=best_val,
        stopped_early=stopped_early, checkpoint_dir=final_dir, best_checkpoint_dir=best_dir,
    )


def linear_probe(
    dataset: Dataset,
    checkpoint: str | Path | dict,
    train_ids: np.ndarray,
    val_ids: np.ndarray,
    config: FinetuneConfig,
    out_dir: str | Path | None = None,
) -> FinetuneResult:
    """Train only the classification head on top of a frozen SSL backbone."""
    probe_config = dataclasses.replace(config, mode="linear_probe", init="ssl_checkpoint")
    return finetune(dataset, train_ids, val_ids, probe_config,
                    checkpoint=checkpoint, out_dir=out_dir)
