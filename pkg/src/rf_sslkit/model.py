"""Encoder architecture: adapted residual backbone, MLP heads, classifier.

The backbone is a bottleneck residual network taking a single-channel
[B, 1, 2, 128] I/Q tensor.  The ``full_resnet50`` variant keeps the standard
50-layer layout (first conv changed from 3 input channels to 1, kernel (7,7),
stride (2,2)); ``reduced_desk_scale`` divides all widths by 8 and uses one
block per stage so that end-to-end experiments run on a laptop CPU.

Contrastive training pairs a query encoder (backbone + 3-layer projection
MLP + 2-layer prediction MLP, both emitting 256-d vectors) with a momentum
encoder (backbone + projection only) that is never updated by gradients.
"""

from __future__ import annotations

import copy
import hashlib
import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import ConfigurationError, DataError

EMBEDDING_DIM = 256
ALLOWED_PROJECTION_WIDTHS = (256, 512, 1024, 2048, 4096)

_VARIANTS = {
    # variant: (stem width, stage widths, blocks per stage)
    "full_resnet50": (64, (64, 128, 256, 512), (3, 4, 6, 3)),
    "reduced_desk_scale": (8, (8, 16, 32, 64), (1, 1, 1, 1)),
}
_EXPANSION = 4


@dataclass
class BackboneConfig:
    variant: str = "full_resnet50"
    in_channels: int = 1
    input_shape: tuple[int, int, int] = (1, 2, 128)
    first_conv_kernel: tuple[int, int] = (7, 7)
    first_conv_stride: tuple[int, int] = (2, 2)

    def validate(self) -> None:
        if self.variant not in _VARIANTS:
            raise ConfigurationError(
                f"unsupported backbone variant {self.variant!r}; choose from {sorted(_VARIANTS)}"
            )
        if self.in_channels != 1:
            raise ConfigurationError("backbone expects single-channel I/Q input")

    @property
    def feature_dim(self) -> int:
        self.validate()
        return _VARIANTS[self.variant][1][-1] * _EXPANSION


@dataclass
class HeadConfig:
    projection_width: int = 512
    embedding_dim: int = EMBEDDING_DIM
    projection_layers: int = 3
    prediction_layers: int = 2

    def validate(self) -> None:
        if self.projection_width not in ALLOWED_PROJECTION_WIDTHS:
            raise ConfigurationError(
                f"projection_width {self.projection_width} not in {ALLOWED_PROJECTION_WIDTHS}"
            )
        if self.embedding_dim != EMBEDDING_DIM:
            raise ConfigurationError(f"embedding_dim must be {EMBEDDING_DIM}")


class Bottleneck(nn.Module):
    """Standard 1x1 -> 3x3 -> 1x1 bottleneck block with identity shortcut."""

    def __init__(self, in_channels: int, mid_channels: int, stride: int = 1):
        super().__init__()
        out_channels = mid_channels * _EXPANSION
        self.conv1 = nn.Conv2d(in_channels, mid_channels, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(mid_channels)
        self.conv2 = nn.Conv2d(mid_channels, mid_channels, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(mid_channels)
        self.conv3 = nn.Conv2d(mid_channels, out_channels, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(out_channels)
        self.relu = nn.ReLU(inplace=True)
        if stride != 1 or in_channels != out_channels:
            self.downsample = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_channels),
            )
        else:
            self.downsample = None

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


class ResNetBackbone(nn.Module):
    """Maps [B, 1, 2, 128] waveform tensors to [B, feature_dim] features."""

    def __init__(self, config: BackboneConfig):
        super().__init__()
        config.validate()
        self.config = config
        stem, widths, blocks = _VARIANTS[config.variant]

        self.conv1 = nn.Conv2d(
            config.in_channels, stem,
            kernel_size=config.first_conv_kernel,
            stride=config.first_conv_stride,
            padding=3, bias=False,
        )
        self.bn1 = nn.BatchNorm2d(stem)
        self.relu = nn.ReLU(inplace=True)
        self.maxpool = nn.MaxPool2d(kernel_size=3, stride=2, padding=1)

        stages = []
        in_channels = stem
        for stage_index, (width, n_blocks) in enumerate(zip(widths, blocks)):
            stride = 1 if stage_index == 0 else 2
            layers = [Bottleneck(in_channels, width, stride=stride)]
            in_channels = width * _EXPANSION
            layers += [Bottleneck(in_channels, width) for _ in range(n_blocks - 1)]
            stages.append(nn.Sequential(*layers))
        self.stages = nn.Sequential(*stages)
        self.avgpool = nn.AdaptiveAvgPool2d(1)
        self.feature_dim = in_channels

    def forward(self, x):
        x = self.maxpool(self.relu(self.bn1(self.conv1(x))))
        x = self.stages(x)
        return torch.flatten(self.avgpool(x), 1)


@contextmanager
def _seeded(seed: int | None):
    """Run model construction under a forked, seeded torch RNG."""
    if seed is None:
        yield
        return
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        yield


def build_backbone(config: BackboneConfig, seed: int | None = None) -> ResNetBackbone:
    """Construct the feature extractor; a fixed seed gives identical parameters."""
    with _seeded(seed):
        return ResNetBackbone(config)


def _mlp(dims: list[int]) -> nn.Sequential:
    # Every linear layer except the last is followed by BatchNorm + ReLU.
    layers: list[nn.Module] = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        layers.append(nn.Linear(dims[i], dims[i + 1], bias=last))
        if not last:
            layers.append(nn.BatchNorm1d(dims[i + 1]))
            layers.append(nn.ReLU(inplace=True))
    return nn.Sequential(*layers)


def build_heads(
    feature_dim: int, config: HeadConfig, seed: int | None = None
) -> tuple[nn.Sequential, nn.Sequential]:
    """Projection (feature_dim -> P -> P -> 256) and prediction (256 -> P -> 256) MLPs."""
    config.validate()
    p, e = config.projection_width, config.embedding_dim
    with _seeded(seed):
        projection = _mlp([feature_dim] + [p] * (config.projection_layers - 1) + [e])
        prediction = _mlp([e] + [p] * (config.prediction_layers - 1) + [e])
    return projection, prediction


class Classifier(nn.Module):
    """Backbone features followed by a single linear layer with c outputs.

    Emits logits; softmax is applied at loss/evaluation time.
    """

    def __init__(self, backbone: ResNetBackbone, n_classes: int):
        super().__init__()
        if n_classes < 2:
            raise ConfigurationError("classifier needs at least 2 classes")
        self.backbone = backbone
        self.fc = nn.Linear(backbone.feature_dim, n_classes)

    def forward(self, x):
        return self.fc(self.backbone(x))


def attach_classifier(backbone: ResNetBackbone, n_classes: int) -> Classifier:
    return Classifier(backbone, n_classes)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def xavier_init(shape, m_in: int, m_out: int, rng: np.random.Generator) -> torch.Tensor:
    """Uniform draw on [-s, s] with s = sqrt(6 / (m_in + m_out))."""
    if m_in < 1 or m_out < 1:
        raise ConfigurationError("fan-in and fan-out must be >= 1")
    scale = np.sqrt(6.0 / (m_in + m_out))
    values = rng.uniform(-scale, scale, size=tuple(shape))
    return torch.from_numpy(np.ascontiguousarray(values, dtype=np.float32))


def xavier_init_model(model: nn.Module, rng: np.random.Generator) -> nn.Module:
    """Re-draw all conv/linear weights with Xavier-uniform; reset biases and norms."""
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, nn.Conv2d):
                kh, kw = module.kernel_size
                fan_in = module.in_channels // module.groups * kh * kw
                fan_out = module.out_channels * kh * kw
                module.weight.copy_(xavier_init(module.weight.shape, fan_in, fan_out, rng))
                if module.bias is not None:
                    module.bias.zero_()
            elif isinstance(module, nn.Linear):
                module.weight.copy_(
                    xavier_init(module.weight.shape, module.in_features, module.out_features, rng)
                )
                if module.bias is not None:
                    module.bias.zero_()
            elif isinstance(module, (nn.BatchNorm1d, nn.BatchNorm2d)):
                module.reset_parameters()
                module.reset_running_stats()
    return model


# ---------------------------------------------------------------------------
# Encoder pair and momentum update
# ---------------------------------------------------------------------------

def momentum_update(momentum_module: nn.Module, query_module: nn.Module, alpha: float) -> None:
    """In-place p_k <- alpha * p_k + (1 - alpha) * p_q over matching parameters."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError(f"momentum coefficient must be in [0, 1], got {alpha}")
    k_params = dict(momentum_module.named_parameters())
    q_params = dict(query_module.named_parameters())
    if k_params.keys() != q_params.keys():
        raise ValueError("parameter structure mismatch between momentum and query modules")
    with torch.no_grad():
        for name, p_k in k_params.items():
            p_q = q_params[name]
            if p_k.shape != p_q.shape:
                raise ValueError(f"parameter {name} shape mismatch: {p_k.shape} vs {p_q.shape}")
            p_k.copy_(alpha * p_k + (1.0 - alpha) * p_q)


class EncoderPair(nn.Module):
    """Query encoder (backbone+projection+prediction) and momentum encoder.

    The momentum encoder starts as an exact copy of the query backbone and
    projection head, carries no prediction head, and is excluded from every
    gradient computation; it evolves only through :meth:`update_momentum`.
    Its batch-norm statistics update through its own forward passes.
    """

    def __init__(
        self,
        backbone_config: BackboneConfig,
        head_config: HeadConfig,
        alpha: float = 0.99,
        tau: float = 1.0,
        seed: int | None = None,
    ):
        super().__init__()
        if not 0.0 <= alpha <= 1.0:
            raise ConfigurationError("alpha must be in [0, 1]")
        if tau <= 0:
            raise ConfigurationError("tau must be > 0")
        self.alpha = alpha
        self.tau = tau
        self.backbone_config = backbone_config
        self.head_config = head_config

        self.query_backbone = build_backbone(backbone_config, seed=seed)
        self.query_projection, self.query_prediction = build_heads(
            self.query_backbone.feature_dim, head_config, seed=None if seed is None else seed + 1
        )
        self.momentum_backbone = copy.deepcopy(self.query_backbone)
        self.momentum_projection = copy.deepcopy(self.query_projection)
        for p in self.momentum_backbone.parameters():
            p.requires_grad_(False)
        for p in self.momentum_projection.parameters():
            p.requires_grad_(False)

    def query_parameters(self):
        yield from self.query_backbone.parameters()
        yield from self.query_projection.parameters()
        yield from self.query_prediction.parameters()

    def forward_query(self, x: torch.Tensor) -> torch.Tensor:
        return self.query_prediction(self.query_projection(self.query_backbone(x)))

    @torch.no_grad()
    def forward_key(self, x: torch.Tensor) -> torch.Tensor:
        return self.momentum_projection(self.momentum_backbone(x))

    @torch.no_grad()
    def update_momentum(self) -> None:
        momentum_update(self.momentum_backbone, self.query_backbone, self.alpha)
        momentum_update(self.momentum_projection, self.query_projection, self.alpha)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_checkpoint(
    out_dir: str | Path,
    state: dict[str, dict],
    backbone_config: BackboneConfig,
    head_config: HeadConfig | None,
    stage: str,
    seed: int,
    epoch: int,
    parent: str | Path | None = None,
) -> Path:
    """Write ``weights.bin`` + ``arch.json`` + ``provenance.json`` into a directory.

    ``state`` maps component names (backbone, projection, prediction,
    classifier, ...) to state dicts.  ``parent`` points at the checkpoint
    directory this model was initialized from, if any.
    """
    if stage not in ("pretrain", "finetune"):
        raise ConfigurationError(f"checkpoint stage must be pretrain|finetune, got {stage!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(state, out_dir / "weights.bin")

    arch = {"backbone": asdict(backbone_config)}
    if head_config is not None:
        arch["heads"] = asdict(head_config)
    (out_dir / "arch.json").write_text(json.dumps(arch, sort_keys=True, indent=2), encoding="utf-8")

    parent_hash = None
    if parent is not None:
        parent_weights = Path(parent) / "weights.bin"
        if parent_weights.exists():
            parent_hash = _sha256(parent_weights)
    provenance = {
        "stage": stage,
        "parent_checkpoint_hash": parent_hash,
        "seed": seed,
        "epoch": epoch,
    }
    (out_dir / "provenance.json").write_text(
        json.dumps(provenance, sort_keys=True, indent=2), encoding="utf-8"
    )
    return out_dir


def load_checkpoint(ckpt_dir: str | Path) -> dict:
    """Read a checkpoint directory back into configs + component state dicts."""
    ckpt_dir = Path(ckpt_dir)
    weights_path = ckpt_dir / "weights.bin"
    if not weights_path.exists():
        raise DataError(f"no weights.bin under {ckpt_dir}")
    arch = json.loads((ckpt_dir / "arch.json").read_text(encoding="utf-8"))
    provenance = json.loads((ckpt_dir / "provenance.json").read_text(encoding="utf-8"))
    backbone_cfg = BackboneConfig(**{
        **arch["backbone"],
        "input_shape": tuple(arch["backbone"]["input_shape"]),
        "first_conv_kernel": tuple(arch["backbone"]["first_conv_kernel"]),
        "first_conv_stride": tuple(arch["backbone"]["first_conv_stride"]),
    })
    head_cfg = HeadConfig(**arch["heads"]) if "heads" in arch else None
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    return {
        "backbone_config": backbone_cfg,
        "head_config": head_cfg,
        "state": state,
        "provenance": provenance,
        "path": ckpt_dir,
    }
