"""Momentum-contrast pretraining on unlabeled waveforms.

Each batch is augmented twice; the query encoder embeds both views through
backbone + projection + prediction, the momentum encoder through backbone +
projection.  Rows are L2-normalized and scored with the InfoNCE loss against
in-batch negatives, symmetrized across the two views.  Gradients update the
query encoder only; the momentum encoder follows as a moving average.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .augment import AugmentationConfig, augment
from .errors import ConfigurationError, DataError, TrainingDivergedError
from .model import EncoderPair, save_checkpoint

_MASK64 = (1 << 64) - 1


@dataclass
class PretrainConfig:
    epochs: int = 100
    batch_size: int = 512
    tau: float = 1.0
    alpha: float = 0.99
    lr: float = 0.01
    weight_decay: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        if self.tau <= 0:
            raise ConfigurationError("tau must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError("alpha must be in [0, 1]")
        if self.batch_size < 2:
            raise ConfigurationError("batch_size must be >= 2 so negatives exist")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")


def l2_normalize(x: torch.Tensor) -> torch.Tensor:
    """Row-wise L2 normalization; a zero-norm row is a contract violation."""
    norms = x.norm(dim=-1)
    if torch.any(norms == 0):
        raise ValueError("cannot L2-normalize a zero-norm embedding")
    return x / norms.unsqueeze(-1)


@dataclass
class ContrastiveBatch:
    """Normalized embeddings of two views: queries q1/q2, keys k1/k2.

    Rows at the same index across all four tensors come from the same
    waveform; view 1 of example i pairs q1[i] with k2[i], view 2 pairs
    q2[i] with k1[i].
    """

    q1: torch.Tensor
    q2: torch.Tensor
    k1: torch.Tensor
    k2: torch.Tensor

    @classmethod
    def from_embeddings(cls, q1, q2, k1, k2) -> "ContrastiveBatch":
        return cls(*(l2_normalize(t) for t in (q1, q2, k1, k2)))

    def validate(self, tol: float = 1e-6) -> None:
        shapes = {t.shape for t in (self.q1, self.q2, self.k1, self.k2)}
        if len(shapes) != 1:
            raise ValueError(f"embedding shape mismatch: {shapes}")
        if self.q1.shape[0] < 2:
            raise ValueError("contrastive batch needs at least 2 rows")
        for name in ("q1", "q2", "k1", "k2"):
            norms = getattr(self, name).norm(dim=1)
            if not torch.all((norms - 1.0).abs() <= tol):
                raise ValueError(f"{name} rows are not unit-norm within {tol}")


def info_nce(
    q: torch.Tensor,
    k_pos: torch.Tensor,
    k_negs: torch.Tensor,
    tau: float,
) -> torch.Tensor:
    """InfoNCE loss for one query against one positive and a set of negatives.

    -log( exp(q.k+ / tau) / (exp(q.k+ / tau) + sum_j exp(q.k-_j / tau)) ),
    evaluated in log-space.  Inputs must be L2-normalized vectors; ``k_negs``
    is a non-empty [K, d] stack.
    """
    if tau <= 0:
        raise ConfigurationError("tau must be > 0")
    k_negs = torch.atleast_2d(k_negs)
    if k_negs.shape[0] == 0:
        raise ValueError("at least one negative key is required")
    logits = torch.cat([(q * k_pos).sum().reshape(1), k_negs @ q]) / tau
    return torch.logsumexp(logits, dim=0) - logits[0]


def batch_contrastive_loss(batch: ContrastiveBatch, tau: float) -> torch.Tensor:
    """Symmetrized InfoNCE over in-batch negatives.

    Per row i, view 1 contributes info_nce(q1[i], k2[i], {k2[j]: j != i}) and
    view 2 contributes info_nce(q2[i], k1[i], {k1[j]: j != i}); the loss is
    the mean of all 2B terms, so a batch with uniform similarities scores
    ln(B).
    """
    batch.validate()
    loss = 0.5 * (_directional_loss(batch.q1, batch.k2, tau)
                  + _directional_loss(batch.q2, batch.k1, tau))
    return loss


def _directional_loss(q: torch.Tensor, k: torch.Tensor, tau: float) -> torch.Tensor:
    logits = q @ k.T / tau
    positives = logits.diagonal()
    return (torch.logsumexp(logits, dim=1) - positives).mean()


# ---------------------------------------------------------------------------
# Pretraining loop
# ---------------------------------------------------------------------------

@dataclass
class PretrainResult:
    epoch_losses: list[float]
    steps: int
    best_epoch: int
    checkpoint_dir: Path | None
    best_checkpoint_dir: Path | None


def _augment_views(
    waveforms: np.ndarray, indices: np.ndarray, config: AugmentationConfig,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    v1 = np.stack([augment(waveforms[i], config, rng) for i in indices])
    v2 = np.stack([augment(waveforms[i], config, rng) for i in indices])
    as_input = lambda v: torch.from_numpy(v.astype(np.float32)).unsqueeze(1)
    return as_input(v1), as_input(v2)


def _divergence_snapshot(out_dir: Path | None, payload: dict) -> None:
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "divergence_snapshot.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )


def pretrain(
    waveforms: np.ndarray,
    encoder_pair: EncoderPair,
    aug_config: AugmentationConfig,
    config: PretrainConfig,
    out_dir: str | Path | None = None,
) -> PretrainResult:
    """Contrastive pretraining over unlabeled [N, 2, 128] waveforms.

    Consumes no label information by construction.  Writes one metrics record
    per epoch to ``pretrain_metrics.jsonl`` and persists the final and
    best-loss checkpoints when ``out_dir`` is given.
    """
    config.validate()
    aug_config.validate()
    waveforms = np.asarray(waveforms)
    if waveforms.ndim != 3 or waveforms.shape[1] != 2:
        raise DataError(f"expected [N, 2, n] waveforms, got shape {waveforms.shape}")
    if len(waveforms) < 2:
        raise DataError("pretraining needs at least 2 waveforms")

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "pretrain_metrics.jsonl" if out_dir is not None else None
    if metrics_path is not None and metrics_path.exists():
        metrics_path.unlink()

    encoder_pair.alpha = config.alpha
    encoder_pair.tau = config.tau
    optimizer = torch.optim.AdamW(
        encoder_pair.query_parameters(), lr=config.lr, weight_decay=config.weight_decay
    )
    shuffle_rng = np.random.default_rng([config.seed & _MASK64, 0])
    augment_rng = np.random.default_rng([config.seed & _MASK64, 1])
    torch.manual_seed(config.seed & _MASK64)

    encoder_pair.train()
    epoch_losses: list[float] = []
    best_epoch, best_loss = -1, float("inf")
    best_state: dict | None = None
    steps = 0
    for epoch in range(1, config.epochs + 1):
        t0 = time.monotonic()
        order = shuffle_rng.permutation(len(waveforms))
        batch_losses: list[float] = []
        for lo in range(0, len(order), config.batch_size):
            indices = order[lo : lo + config.batch_size]
            if len(indices) < 2:
                continue  # a single leftover waveform has no in-batch negative
            x1, x2 = _augment_views(waveforms, indices, aug_config, augment_rng)

            q1 = encoder_pair.forward_query(x1)
            q2 = encoder_pair.forward_query(x2)
            k1 = encoder_pair.forward_key(x1)
            k2 = encoder_pair.forward_key(x2)
            finite = all(torch.isfinite(t).all() for t in (q1, q2, k1, k2))
            loss = None
            if finite:
                batch = ContrastiveBatch.from_embeddings(q1, q2, k1, k2)
                loss = batch_contrastive_loss(batch, config.tau)

            if loss is None or not torch.isfinite(loss):
                _divergence_snapshot(out_dir, {
                    "stage": "pretrain", "epoch": epoch, "step": steps,
                    "loss": None if loss is None else float(loss.detach()),
                    "recent_epoch_losses": epoch_losses[-5:],
                })
                raise TrainingDivergedError(
                    f"non-finite contrastive loss at epoch {epoch}, step {steps}"
                )

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            encoder_pair.update_momentum()
            steps += 1
            batch_losses.append(float(loss.detach()))

        mean_loss = float(np.mean(batch_losses))
        epoch_losses.append(mean_loss)
        if metrics_path is not None:
            with open(metrics_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "epoch": epoch,
                    "mean_loss": mean_loss,
                    "wall_time_s": time.monotonic() - t0,
                }) + "\n")
        if mean_loss < best_loss:
            best_loss, best_epoch = mean_loss, epoch
            best_state = {
                "backbone": {k: v.clone() for k, v in encoder_pair.query_backbone.state_dict().items()},
                "projection": {k: v.clone() for k, v in encoder_pair.query_projection.state_dict().items()},
                "prediction": {k: v.clone() for k, v in encoder_pair.query_prediction.state_dict().items()},
            }

    final_dir = best_dir = None
    if out_dir is not None:
        final_dir = save_checkpoint(
            out_dir / "checkpoint_final",
            {
                "backbone": encoder_pair.query_backbone.state_dict(),
                "projection": encoder_pair.query_projection.state_dict(),
                "prediction": encoder_pair.query_prediction.state_dict(),
            },
            encoder_pair.backbone_config, encoder_pair.head_config,
            stage="pretrain", seed=config.seed, epoch=config.epochs,
        )
        best_dir = save_checkpoint(
            out_dir / "checkpoint_best", best_state,
            encoder_pair.backbone_config, encoder_pair.head_config,
            stage="pretrain", seed=config.seed, epoch=best_epoch,
        )
    return PretrainResult(
        epoch_losses=epoch_losses, steps=steps, best_epoch=best_epoch,
        checkpoint_dir=final_dir, best_checkpoint_dir=best_dir,
    )
