"""Sample-efficiency sweep: accuracy as a function of the labeled fraction.

Fine-tunes from the same SSL checkpoint and from Xavier init at several
label fractions, then plots accuracy against the fraction on a log axis.
The interesting region is the far left, where labels are scarce.  Takes a
few CPU-minutes.  Produces ``sample_efficiency.png`` and ``sweep.csv``.
"""

import numpy as np

from rf_sslkit.augment import AugmentationConfig
from rf_sslkit.benchmark import make_desk_dataset
from rf_sslkit.dataio import SplitSpec, split_dataset
from rf_sslkit.evaluation import sample_efficiency_sweep
from rf_sslkit.finetune import FinetuneConfig
from rf_sslkit.model import BackboneConfig, EncoderPair, HeadConfig, load_checkpoint
from rf_sslkit.plots import plot_sample_efficiency
from rf_sslkit.ssl import PretrainConfig, pretrain

SEED = 0
backbone_config = BackboneConfig(variant="reduced_desk_scale")
dataset = make_desk_dataset("demo_runs/sweep", seed=SEED)

base = split_dataset(dataset.manifest, SplitSpec(0.20, 0.5, seed=SEED))
pool = np.sort(np.concatenate([base.train_ids, base.val_ids]))
pair = EncoderPair(backbone_config, HeadConfig(projection_width=256),
                   alpha=0.9, tau=0.2, seed=SEED)
ssl = pretrain(dataset.iq[pool], pair, AugmentationConfig(),
               PretrainConfig(epochs=12, batch_size=64, tau=0.2, alpha=0.9, seed=SEED),
               out_dir="demo_runs/sweep/ssl")

rows = sample_efficiency_sweep(
    dataset,
    fractions=[0.01, 0.05, 0.5],
    seeds=[SEED],
    finetune_config=FinetuneConfig(max_epochs=30, lr_halving_patience=5,
                                   early_stop_patience=10, batch_size=64),
    backbone_config=backbone_config,
    checkpoint=load_checkpoint(ssl.checkpoint_dir),
    split_seed=SEED,
    out_dir=".",
)
for row in rows:
    print(f"fraction {row.fraction:5.2f}  init {row.init:15s}  "
          f"accuracy {row.accuracy:5.1f}%")
plot_sample_efficiency(rows, ".")
print("wrote sample_efficiency.png / .svg and sweep.csv / sweep_matrix.csv")
