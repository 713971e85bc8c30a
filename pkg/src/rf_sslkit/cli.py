"""Experiment orchestration: config parsing, subcommands, run directories.

Every invocation creates a fresh self-describing run directory
``<output_dir>/<timestamp>-<confighash>/`` holding the fully-resolved config
snapshot plus the subcommand's artifacts.  Exit codes: 0 ok, 2 config error,
3 data error, 4 training divergence, 5 leakage-guard violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import augment as augment_mod
from . import dataio, evaluation, plots
from .errors import (
    ConfigurationError,
    DataError,
    LeakageError,
    RFSSLKitError,
    TrainingDivergedError,
)

OUTPUT_ENV_VAR = "RF_SSLKIT_OUTPUT"
SUBCOMMANDS = ("generate", "split", "pretrain", "finetune", "evaluate", "sweep", "plot")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4
EXIT_LEAKAGE = 5


# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

def default_config() -> dict:
    return {
        "seed": 0,
        "output_dir": None,
        "dataset": {
            "source": "generate",
            "path": None,
            "classes": list(dataio.MODULATION_NAMES),
            "snr_grid": list(dataio.SNR_GRID),
            "examples_per_cell": 1000,
            "samples_per_symbol": 8,
            "freq_offset_max": 0.01,
            "test_fraction": 0.20,
        },
        "augment": {
            "dc_shift_range": [0.0, 1e-4],
            "time_shift_range": [-40, 40],
            "amplitude_scale_range": [0.8, 1.2],
            "zero_mask_len_range": [0, 25],
            "awgn_variance": 1e-5,
        },
        "model": {
            "variant": "full_resnet50",
            "projection_width": 512,
        },
        "ssl": {
            "epochs": 100,
            "batch_size": 512,
            "tau": 1.0,
            "alpha": 0.99,
            "lr": 0.01,
            "weight_decay": 0.01,
        },
        "finetune": {
            "max_epochs": 500,
            "lr": 0.01,
            "lr_halving_patience": 5,
            "early_stop_patience": 20,
            "batch_size": 400,
            "mode": "end_to_end",
            "init": "ssl_checkpoint",
            "weight_decay": 0.01,
        },
        "eval": {
            "fractions": [0.005, 0.01, 0.05, 0.10, 0.50, 0.75, 0.90],
            "seeds": [0],
            "inits": ["ssl", "xavier"],
        },
    }


def _check(condition: bool, errors: list[str], message: str) -> None:
    if not condition:
        errors.append(message)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _validate_range(value, errors, key, integer=False) -> None:
    ok = (
        isinstance(value, (list, tuple)) and len(value) == 2
        and all(_is_num(v) for v in value) and value[0] <= value[1]
    )
    _check(ok, errors, f"{key}: expected [min, max] with min <= max, got {value!r}")
    if ok and integer:
        _check(all(float(v).is_integer() for v in value), errors,
               f"{key}: bounds must be integers, got {value!r}")


def validate_config(config: dict) -> list[str]:
    """Collect every schema violation; an empty list means the config is valid."""
    errors: list[str] = []
    defaults = default_config()
    unknown = set(config) - set(defaults)
    for key in sorted(unknown):
        errors.append(f"unknown top-level key: {key!r}")
    for section in ("dataset", "augment", "model", "ssl", "finetune", "eval"):
        sub = config.get(section, {})
        if not isinstance(sub, dict):
            errors.append(f"{section}: expected an object")
            continue
        allowed = set(defaults[section]) | ({"order"} if section == "augment" else set())
        for key in sorted(set(sub) - allowed):
            errors.append(f"{section}: unknown key {key!r}")

    _check(isinstance(config.get("seed", 0), int), errors, "seed: expected an integer")
    out = config.get("output_dir")
    _check(out is None or isinstance(out, str), errors, "output_dir: expected a string")

    ds = config.get("dataset", {})
    if isinstance(ds, dict):
        _check(ds.get("source", "generate") in ("generate", "upstream", "container"),
               errors, "dataset.source: expected generate|upstream|container")
        if ds.get("source") in ("upstream", "container"):
            _check(isinstance(ds.get("path"), str), errors,
                   "dataset.path: required for upstream/container sources")
        for name in ds.get("classes", []):
            _check(name in dataio.MODULATION_NAMES, errors,
                   f"dataset.classes: unknown modulation {name!r}")
        epc = ds.get("examples_per_cell", 1)
        _check(isinstance(epc, int) and epc >= 1, errors,
               "dataset.examples_per_cell: expected integer >= 1")
        tf = ds.get("test_fraction", 0.2)
        _check(_is_num(tf) and 0 < tf < 1, errors,
               "dataset.test_fraction: expected a number in (0, 1)")

    aug = config.get("augment", {})
    if isinstance(aug, dict):
        _validate_range(aug.get("dc_shift_range", [0, 0]), errors, "augment.dc_shift_range")
        _validate_range(aug.get("time_shift_range", [0, 0]), errors,
                        "augment.time_shift_range", integer=True)
        _validate_range(aug.get("amplitude_scale_range", [1, 1]), errors,
                        "augment.amplitude_scale_range")
        _validate_range(aug.get("zero_mask_len_range", [0, 0]), errors,
                        "augment.zero_mask_len_range", integer=True)
        var = aug.get("awgn_variance", 0.0)
        _check(_is_num(var) and var >= 0, errors, "augment.awgn_variance: expected a number >= 0")

    mdl = config.get("model", {})
    if isinstance(mdl, dict):
        from .model import ALLOWED_PROJECTION_WIDTHS, _VARIANTS

        _check(mdl.get("variant", "full_resnet50") in _VARIANTS, errors,
               f"model.variant: expected one of {sorted(_VARIANTS)}")
        _check(mdl.get("projection_width", 512) in ALLOWED_PROJECTION_WIDTHS, errors,
               f"model.projection_width: expected one of {ALLOWED_PROJECTION_WIDTHS}")

    ssl_cfg = config.get("ssl", {})
    if isinstance(ssl_cfg, dict):
        _check(_is_num(ssl_cfg.get("tau", 1.0)) and ssl_cfg.get("tau", 1.0) > 0,
               errors, "ssl.tau: expected a number > 0")
        alpha = ssl_cfg.get("alpha", 0.99)
        _check(_is_num(alpha) and 0 <= alpha <= 1, errors, "ssl.alpha: expected a number in [0, 1]")
        bs = ssl_cfg.get("batch_size", 2)
        _check(isinstance(bs, int) and bs >= 2, errors, "ssl.batch_size: expected integer >= 2")
        _check(isinstance(ssl_cfg.get("epochs", 1), int) and ssl_cfg.get("epochs", 1) >= 1,
               errors, "ssl.epochs: expected integer >= 1")

    ft = config.get("finetune", {})
    if isinstance(ft, dict):
        _check(ft.get("mode", "end_to_end") in ("end_to_end", "linear_probe"),
               errors, "finetune.mode: expected end_to_end|linear_probe")
        _check(ft.get("init", "ssl_checkpoint") in ("ssl_checkpoint", "xavier"),
               errors, "finetune.init: expected ssl_checkpoint|xavier")
        halve = ft.get("lr_halving_patience", 5)
        stop = ft.get("early_stop_patience", 20)
        _check(isinstance(halve, int) and isinstance(stop, int) and stop > halve, errors,
               "finetune: early_stop_patience must exceed lr_halving_patience")

    ev = config.get("eval", {})
    if isinstance(ev, dict):
        for f in ev.get("fractions", []):
            _check(_is_num(f) and 0 < f <= 1, errors,
                   f"eval.fractions: fraction {f!r} outside (0, 1]")
        for init in ev.get("inits", []):
            _check(init in ("ssl", "xavier"), errors,
                   f"eval.inits: expected ssl|xavier, got {init!r}")
    return errors


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            merged[key] = _merge(base[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: str | Path | None) -> dict:
    config = default_config()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigurationError("config file must hold a JSON object")
        config = _merge(config, user)  # unknown keys survive the merge and fail validation
    errors = validate_config(config)
    if errors:
        raise ConfigurationError("invalid config:\n  " + "\n  ".join(errors))
    return config


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def make_run_dir(config: dict, subcommand: str) -> Path:
    root = config.get("output_dir") or os.environ.get(OUTPUT_ENV_VAR) or "runs"
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = f"{stamp}-{config_hash(config)[:8]}"
    run_dir = Path(root) / base
    suffix = 1
    while run_dir.exists():
        suffix += 1
        run_dir = Path(root) / f"{base}-{suffix}"
    run_dir.mkdir(parents=True)
    snapshot = dict(config)
    snapshot["subcommand"] = subcommand
    (run_dir / "config.json").write_text(
        json.dumps(snapshot, indent=2, sort_keys=True), encoding="utf-8"
    )
    return run_dir


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------

def _augment_config(config: dict) -> augment_mod.AugmentationConfig:
    aug = config["augment"]
    cfg = augment_mod.AugmentationConfig(
        dc_shift_range=tuple(aug["dc_shift_range"]),
        time_shift_range=tuple(int(v) for v in aug["time_shift_range"]),
        amplitude_scale_range=tuple(aug["amplitude_scale_range"]),
        zero_mask_len_range=tuple(int(v) for v in aug["zero_mask_len_range"]),
        awgn_variance=aug["awgn_variance"],
        order=tuple(aug.get("order", augment_mod.DEFAULT_ORDER)),
    )
    cfg.validate()
    return cfg


def _backbone_config(config: dict):
    from .model import BackboneConfig

    return BackboneConfig(variant=config["model"]["variant"])


def _load_dataset(config: dict, dataset_path: str | None) -> dataio.Dataset:
    ds = config["dataset"]
    source = ds["source"]
    path = dataset_path or ds.get("path")
    if path is None:
        raise ConfigurationError("a dataset path is required (flag --dataset or dataset.path)")
    if source == "upstream":
        return dataio.load_upstream(path)
    return dataio.load_container(path)


def _load_split(path: str | None, run_dir: Path, config: dict,
                manifest, train_fraction: float | None) -> dataio.Split:
    if path is not None:
        return dataio.load_split(path)
    if train_fraction is None:
        raise ConfigurationError("provide --splits PATH or --train-fraction")
    spec = dataio.SplitSpec(
        test_fraction=config["dataset"]["test_fraction"],
        train_fraction_of_pool=train_fraction,
        seed=config["seed"],
    )
    split = dataio.split_dataset(manifest, spec)
    dataio.save_split(split, run_dir / "splits.json")
    return split


def _classifier_from_checkpoint(ckpt: dict):
    from .model import attach_classifier, build_backbone

    state = ckpt["state"]
    if "classifier" not in state:
        raise DataError("checkpoint has no classifier head; run the finetune subcommand first")
    backbone = build_backbone(ckpt["backbone_config"])
    n_classes = state["classifier"]["weight"].shape[0]
    model = attach_classifier(backbone, n_classes)
    model.backbone.load_state_dict(state["backbone"])
    model.fc.load_state_dict(state["classifier"])
    return model


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_generate(config: dict, args, run_dir: Path) -> int:
    ds = config["dataset"]
    manifest = dataio.generate_dataset(
        run_dir / "dataset",
        classes=ds["classes"],
        snr_grid=ds["snr_grid"],
        examples_per_cell=ds["examples_per_cell"],
        seed=config["seed"],
        samples_per_symbol=ds["samples_per_symbol"],
        freq_offset_max=ds["freq_offset_max"],
    )
    print(f"generated {manifest.total} examples in {run_dir / 'dataset'}")
    return EXIT_OK


def _cmd_split(config: dict, args, run_dir: Path) -> int:
    dataset = _load_dataset(config, args.dataset)
    spec = dataio.SplitSpec(
        test_fraction=config["dataset"]["test_fraction"],
        train_fraction_of_pool=args.train_fraction,
        seed=args.seed if args.seed is not None else config["seed"],
    )
    split = dataio.split_dataset(dataset.manifest, spec)
    dataio.save_split(split, run_dir / "splits.json")
    print(f"split: {len(split.train_ids)} train / {len(split.val_ids)} val / "
          f"{len(split.test_ids)} test -> {run_dir / 'splits.json'}")
    return EXIT_OK


def _cmd_pretrain(config: dict, args, run_dir: Path) -> int:
    from .model import EncoderPair, HeadConfig
    from .ssl import PretrainConfig, pretrain

    dataset = _load_dataset(config, args.dataset)
    if args.splits is not None:
        split = dataio.load_split(args.splits)
        pool = np.concatenate([split.train_ids, split.val_ids])
    else:
        pool = np.arange(len(dataset), dtype=np.int64)

    ssl_section = config["ssl"]
    cfg = PretrainConfig(
        epochs=args.epochs if args.epochs is not None else ssl_section["epochs"],
        batch_size=args.batch_size if args.batch_size is not None else ssl_section["batch_size"],
        tau=args.tau if args.tau is not None else ssl_section["tau"],
        alpha=args.alpha if args.alpha is not None else ssl_section["alpha"],
        lr=ssl_section["lr"],
        weight_decay=ssl_section["weight_decay"],
        seed=args.seed if args.seed is not None else config["seed"],
    )
    width = (args.projection_width if args.projection_width is not None
             else config["model"]["projection_width"])
    pair = EncoderPair(
        _backbone_config(config), HeadConfig(projection_width=width),
        alpha=cfg.alpha, tau=cfg.tau, seed=cfg.seed,
    )
    # unlabeled view: waveforms only, no label array is ever passed in
    result = pretrain(dataset.iq[pool], pair, _augment_config(config), cfg, out_dir=run_dir)
    print(f"pretrained {cfg.epochs} epochs ({result.steps} steps), "
          f"final loss {result.epoch_losses[-1]:.4f}, checkpoints in {run_dir}")
    return EXIT_OK


def _cmd_finetune(config: dict, args, run_dir: Path) -> int:
    from .finetune import FinetuneConfig, finetune

    dataset = _load_dataset(config, args.dataset)
    split = _load_split(args.splits, run_dir, config, dataset.manifest, args.train_fraction)

    ft = config["finetune"]
    init = {"ssl": "ssl_checkpoint", "xavier": "xavier"}[args.init] if args.init else ft["init"]
    mode = {"e2e": "end_to_end", "probe": "linear_probe"}[args.mode] if args.mode else ft["mode"]
    cfg = FinetuneConfig(
        max_epochs=args.max_epochs if args.max_epochs is not None else ft["max_epochs"],
        lr=ft["lr"],
        lr_halving_patience=ft["lr_halving_patience"],
        early_stop_patience=ft["early_stop_patience"],
        batch_size=ft["batch_size"],
        mode=mode,
        init=init,
        seed=args.seed if args.seed is not None else config["seed"],
        weight_decay=ft["weight_decay"],
    )
    if cfg.init == "ssl_checkpoint" and args.checkpoint is None:
        raise ConfigurationError("--checkpoint is required with --init ssl")
    result = finetune(
        dataset, split.train_ids, split.val_ids, cfg,
        backbone_config=_backbone_config(config),
        checkpoint=args.checkpoint, out_dir=run_dir,
    )
    print(f"finetuned: best val loss {result.best_val_loss:.4f} at epoch "
          f"{result.best_epoch}, checkpoint in {result.best_checkpoint_dir}")
    return EXIT_OK


def _cmd_evaluate(config: dict, args, run_dir: Path) -> int:
    from .model import load_checkpoint

    dataset = _load_dataset(config, args.dataset)
    split = dataio.load_split(args.splits)
    model = _classifier_from_checkpoint(load_checkpoint(args.checkpoint))
    report = evaluation.evaluate(model, dataset, split)
    evaluation.write_report_files(report, run_dir)
    print(f"overall accuracy {report.overall_accuracy:.1f}% on {report.n_test} test examples; "
          f"report in {run_dir}")
    return EXIT_OK


def _cmd_sweep(config: dict, args, run_dir: Path) -> int:
    from .finetune import FinetuneConfig

    dataset = _load_dataset(config, args.dataset)
    ev = config["eval"]
    fractions = args.fractions or ev["fractions"]
    seeds = args.seeds or ev["seeds"]
    init_map = {"ssl": "ssl_checkpoint", "xavier": "xavier"}
    inits = tuple(init_map[i] for i in (args.inits or ev["inits"]))

    ft = config["finetune"]
    cfg = FinetuneConfig(
        max_epochs=args.max_epochs if args.max_epochs is not None else ft["max_epochs"],
        lr=ft["lr"], lr_halving_patience=ft["lr_halving_patience"],
        early_stop_patience=ft["early_stop_patience"], batch_size=ft["batch_size"],
        weight_decay=ft["weight_decay"],
    )
    rows = evaluation.sample_efficiency_sweep(
        dataset, fractions, seeds, cfg,
        backbone_config=_backbone_config(config),
        checkpoint=args.checkpoint,
        inits=inits,
        test_fraction=config["dataset"]["test_fraction"],
        split_seed=config["seed"],
        out_dir=run_dir,
    )
    print(f"sweep complete: {len(rows)} runs, results in {run_dir / 'sweep.csv'}")
    return EXIT_OK


def _cmd_plot(config: dict, args, run_dir: Path) -> int:
    made = []
    if args.reports:
        labeled = []
        for token in args.reports:
            label, _, path = token.rpartition("=")
            path = Path(path)
            if not path.exists():
                raise DataError(f"no report file at {path}")
            report = evaluation.EvalReport.from_json(path.read_text(encoding="utf-8"))
            labeled.append((label or path.parent.name, report))
        made += plots.plot_reports(labeled, run_dir)
    if args.sweep:
        sweep_path = Path(args.sweep)
        if not sweep_path.exists():
            raise DataError(f"no sweep file at {sweep_path}")
        rows = []
        with open(sweep_path, newline="", encoding="utf-8") as fh:
            for record in csv.DictReader(fh):
                rows.append(evaluation.SweepRow(
                    fraction=float(record["fraction"]), init=record["init"],
                    seed=int(record["seed"]), accuracy=float(record["accuracy"]),
                ))
        made += plots.plot_sample_efficiency(rows, run_dir)
    if not made:
        raise ConfigurationError("plot needs --reports and/or --sweep")
    print("wrote " + ", ".join(str(p) for p in made))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rf-sslkit",
        description="Self-supervised RF representation learning toolkit",
    )
    parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--output-dir", help="run directory root (default: "
                        f"${OUTPUT_ENV_VAR} or ./runs)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="synthesize a waveform dataset container")
    p.add_argument("--examples-per-cell", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("split", help="carve deterministic train/val/test id lists")
    p.add_argument("--dataset", help="dataset container dir (or upstream file per config)")
    p.add_argument("--train-fraction", type=float, required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("pretrain", help="momentum-contrast pretraining (no labels)")
    p.add_argument("--dataset")
    p.add_argument("--splits", help="restrict to the non-test pool of this split file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--projection-width", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("finetune", help="supervised training from SSL or Xavier init")
    p.add_argument("--dataset")
    p.add_argument("--splits")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--init", choices=("ssl", "xavier"))
    p.add_argument("--checkpoint")
    p.add_argument("--mode", choices=("e2e", "probe"))
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("evaluate", help="score a finetuned checkpoint on the test split")
    p.add_argument("--dataset")
    p.add_argument("--splits", required=True)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("sweep", help="sample-efficiency sweep over label fractions")
    p.add_argument("--dataset")
    p.add_argument("--checkpoint")
    p.add_argument("--fractions", type=lambda s: [float(v) for v in s.split(",")])
    p.add_argument("--seeds", type=lambda s: [int(v) for v in s.split(",")])
    p.add_argument("--inits", type=lambda s: s.split(","))
    p.add_argument("--max-epochs", type=int)

    p = sub.add_parser("plot", help="figures from eval reports and sweep tables")
    p.add_argument("--reports", nargs="*", metavar="[LABEL=]PATH")
    p.add_argument("--sweep")
    return parser


_DISPATCH = {
    "generate": _cmd_generate,
    "split": _cmd_split,
    "pretrain": _cmd_pretrain,
    "finetune": _cmd_finetune,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
}


def run(subcommand: str, config: dict, args) -> int:
    """Execute one subcommand against a validated config; returns an exit code."""
    if subcommand not in _DISPATCH:
        raise ConfigurationError(f"unknown subcommand {subcommand!r}")
    run_dir = make_run_dir(config, subcommand)
    return _DISPATCH[subcommand](config, args, run_dir)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.output_dir:
            config["output_dir"] = args.output_dir
        return run(args.subcommand, config, args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except LeakageError as exc:
        print(f"leakage guard: {exc}", file=sys.stderr)
        return EXIT_LEAKAGE
    except RFSSLKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
