"""Show each waveform transformation next to the original signal.

The five transforms (DC shift, circular time shift, amplitude scale,
zero-masking, AWGN) can change numerical values a lot while leaving the
modulation identity intact -- that is what makes them usable for building
contrastive view pairs.  Produces ``augmentations.png``.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rf_sslkit.augment import (
    AugmentationConfig,
    amplitude_scale,
    augment,
    awgn,
    dc_shift,
    time_shift,
    zero_mask,
)
from rf_sslkit.dataio import SynthesisParams, synthesize_waveform

rng = np.random.default_rng(7)
x = synthesize_waveform("QPSK", SynthesisParams(target_snr_db=18.0, rng_seed=3)).iq

# exaggerated parameters so the effect is visible by eye; training draws
# from the narrower configured ranges
shown = [
    ("DC shift", dc_shift(x, 0.3, 0.3)),
    ("time shift", time_shift(x, 24)),
    ("amplitude scale", amplitude_scale(x, 0.8)),
    ("zero-masking", zero_mask(x, 50, 25)),
    ("AWGN", awgn(x, 0.05, rng)),
    ("full chain", augment(x, AugmentationConfig(), rng)),
]

fig, axes = plt.subplots(3, 2, figsize=(10, 7), sharex=True)
for ax, (title, out) in zip(axes.ravel(), shown):
    ax.plot(x[0], color="0.7", lw=0.8, label="original I")
    ax.plot(out[0], color="C0", lw=0.9, label="transformed I")
    ax.set_title(title, fontsize=10)
axes[0, 0].legend(fontsize=7)
fig.tight_layout()
fig.savefig("augmentations.png", dpi=120)
print("wrote augmentations.png")

# two draws from the same config are two distinct views of one waveform
v1, v2 = augment(x, AugmentationConfig(), rng), augment(x, AugmentationConfig(), rng)
print("view difference (max abs):", np.abs(v1 - v2).max())
