"""Semantics-preserving waveform transformations for contrastive view pairs.

Five transforms operate on a [2, N] I/Q array and never touch the label:
DC shift, circular time shift, amplitude scaling, zero-masking, and additive
white Gaussian noise.  ``augment`` applies all five in a fixed order with
parameters drawn uniformly at random from the configured ranges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_ORDER = ("dc_shift", "time_shift", "amplitude_scale", "zero_mask", "awgn")


@dataclass
class AugmentationConfig:
    """Parameter ranges for the five waveform transformations.

    Defaults are the published ranges: DC shift in [0, 1e-4] amplitude units,
    time shift in [-40, 40] samples, amplitude scale in [0.8, 1.2],
    zero-mask length in [0, 25] samples, AWGN variance 1e-5 per component.
    """

    dc_shift_range: tuple[float, float] = (0.0, 1e-4)
    time_shift_range: tuple[int, int] = (-40, 40)
    amplitude_scale_range: tuple[float, float] = (0.8, 1.2)
    zero_mask_len_range: tuple[int, int] = (0, 25)
    awgn_variance: float = 1e-5
    order: tuple[str, ...] = DEFAULT_ORDER

    def validate(self) -> None:
        for name in ("dc_shift_range", "time_shift_range",
                     "amplitude_scale_range", "zero_mask_len_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigurationError(f"{name} has min {lo} > max {hi}")
        for name in ("time_shift_range", "zero_mask_len_range"):
            if any(v != int(v) for v in getattr(self, name)):
                raise ConfigurationError(f"{name} bounds must be integers")
        if self.awgn_variance < 0:
            raise ConfigurationError("awgn_variance must be >= 0")
        if self.zero_mask_len_range[0] < 0:
            raise ConfigurationError("zero_mask_len_range must be non-negative")
        unknown = set(self.order) - set(DEFAULT_ORDER)
        if unknown:
            raise ConfigurationError(f"unknown transforms in order: {sorted(unknown)}")

    @classmethod
    def identity(cls) -> "AugmentationConfig":
        """Ranges collapsed so that ``augment`` is the identity map."""
        return cls(
            dc_shift_range=(0.0, 0.0),
            time_shift_range=(0, 0),
            amplitude_scale_range=(1.0, 1.0),
            zero_mask_len_range=(0, 0),
            awgn_variance=0.0,
        )


def _check_shape(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != 2:
        raise ValueError(f"expected a [2, N] I/Q array, got shape {x.shape}")
    return x


def dc_shift(x: np.ndarray, offset_i: float, offset_q: float) -> np.ndarray:
    """Add a constant offset to the in-phase and quadrature rows."""
    x = _check_shape(x)
    out = x.copy()
    out[0] += offset_i
    out[1] += offset_q
    return out


def time_shift(x: np.ndarray, k: int) -> np.ndarray:
    """Circularly shift both rows by k samples (positive k delays the signal)."""
    x = _check_shape(x)
    return np.roll(x, int(k), axis=1)


def amplitude_scale(x: np.ndarray, s: float) -> np.ndarray:
    """Multiply the waveform by a constant factor."""
    return _check_shape(x) * s


def zero_mask(x: np.ndarray, start: int, length: int) -> np.ndarray:
    """Null ``length`` consecutive samples of both rows starting at ``start``."""
    x = _check_shape(x)
    n = x.shape[1]
    if length < 0:
        raise ValueError(f"mask length must be >= 0, got {length}")
    if not 0 <= start <= n - length:
        raise ValueError(f"mask [{start}, {start + length}) out of bounds for N={n}")
    out = x.copy()
    out[:, start : start + length] = 0.0
    return out


def awgn(x: np.ndarray, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of the given variance to every element."""
    x = _check_shape(x)
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return x.copy()
    return x + rng.standard_normal(x.shape) * np.sqrt(variance)


def augment(x: np.ndarray, config: AugmentationConfig, rng: np.random.Generator) -> np.ndarray:
    """Apply all five transforms consecutively with randomly drawn parameters.

    Each parameter is drawn uniformly from its configured range, fresh per
    call, so that two calls on the same waveform yield two distinct views.
    Deterministic given (x, config, rng state).
    """
    x = _check_shape(x)
    n = x.shape[1]
    out = x
    for name in config.order:
        if name == "dc_shift":
            lo, hi = config.dc_shift_range
            out = dc_shift(out, rng.uniform(lo, hi), rng.uniform(lo, hi))
        elif name == "time_shift":
            lo, hi = config.time_shift_range
            out = time_shift(out, int(rng.integers(lo, hi + 1)))
        elif name == "amplitude_scale":
            lo, hi = config.amplitude_scale_range
            out = amplitude_scale(out, rng.uniform(lo, hi))
        elif name == "zero_mask":
            lo, hi = config.zero_mask_len_range
            length = int(rng.integers(lo, hi + 1))
            start = int(rng.integers(0, n - length + 1))
            out = zero_mask(out, start, length)
        elif name == "awgn":
            out = awgn(out, config.awgn_variance, rng)
        else:
            raise ConfigurationError(f"unknown transform {name!r}")
    return out.copy() if out is x else out


def augment_pair(
    x: np.ndarray, config: AugmentationConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Two independently augmented views of the same waveform."""
    return augment(x, config, rng), augment(x, config, rng)
