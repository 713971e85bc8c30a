"""Self-supervised representation learning for RF I/Q waveforms.

Pretrains a convolutional encoder on unlabeled waveforms with momentum
contrast and RF-specific augmentations, then fine-tunes it for automatic
modulation recognition.  See the module docstrings for the pieces:

- ``dataio``: waveform synthesis, dataset containers, stratified splits
- ``augment``: the five semantics-preserving transforms and their composition
- ``model``: residual backbone, projection/prediction heads, momentum update
- ``ssl``: InfoNCE loss and the contrastive pretraining loop
- ``finetune``: supervised training protocol and linear probing
- ``evaluation``: accuracy reports, sample-efficiency sweeps, model stats
- ``cli``: ``rf-sslkit`` subcommands and run directories
"""

__version__ = "0.1.0"
