"""Waveform synthesis, dataset containers, and reproducible stratified splits.

A dataset is a grid of (modulation class, SNR) cells with a fixed number of
examples per cell.  Examples are addressed by integer ids laid out cell-major:
cells ordered by (class index, snr ascending), then example index within the
cell.  The on-disk container is a directory with ``manifest.json`` plus one
raw little-endian float32 shard per cell (``<class>_<snr>.f32``).
"""

from __future__ import annotations

import json
import math
import pickle
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, IngestionError, SplitError, SynthesisError

N_SAMPLES = 128
SNR_GRID = tuple(range(-20, 20, 2))  # -20 dB .. 18 dB in 2 dB steps
FORMAT_VERSION = 1

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# Modulation classes and baseband synthesis
# ---------------------------------------------------------------------------

MODULATION_NAMES = (
    "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK",
    "PAM4", "QAM16", "QAM64", "QPSK", "WBFM",
)
assert list(MODULATION_NAMES) == sorted(MODULATION_NAMES)

ANALOG_NAMES = ("AM-DSB", "AM-SSB", "WBFM")


@dataclass(frozen=True)
class ModulationClass:
    """One of the eleven supported modulations, index sorted by name."""

    name: str
    index: int

    @classmethod
    def from_name(cls, name: str) -> "ModulationClass":
        if name not in MODULATION_NAMES:
            raise ConfigurationError(f"unsupported modulation name: {name!r}")
        return cls(name=name, index=MODULATION_NAMES.index(name))

    @classmethod
    def from_index(cls, index: int) -> "ModulationClass":
        if not 0 <= index < len(MODULATION_NAMES):
            raise ConfigurationError(f"modulation index out of range: {index}")
        return cls(name=MODULATION_NAMES[index], index=index)


def _unit_power(points: np.ndarray) -> np.ndarray:
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def _square_qam(order: int) -> np.ndarray:
    side = int(round(math.sqrt(order)))
    axis = np.arange(-(side - 1), side, 2, dtype=float)
    grid = axis[:, None] + 1j * axis[None, :]
    return _unit_power(grid.ravel())


# Unit-average-power constellations.  BPSK is written out explicitly so the
# noiseless waveform is exactly real.
_CONSTELLATIONS = {
    "BPSK": np.array([1.0 + 0.0j, -1.0 + 0.0j]),
    "QPSK": _unit_power(np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])),
    "8PSK": np.exp(2j * np.pi * np.arange(8) / 8),
    "PAM4": _unit_power(np.arange(-3, 4, 2).astype(complex)),
    "QAM16": _square_qam(16),
    "QAM64": _square_qam(64),
}

_CPFSK_MOD_INDEX = 0.5
_GFSK_BT = 0.35
_FM_DEVIATION = 0.05          # peak phase step, fraction of 2*pi rad/sample
_AM_MOD_INDEX = 0.5
_ANALOG_CUTOFF_FRAC = 0.1     # message bandwidth, fraction of sample rate


def _nrz_symbols(rng: np.random.Generator, n_symbols: int) -> np.ndarray:
    return rng.integers(0, 2, n_symbols).astype(float) * 2.0 - 1.0


def _gaussian_taps(sps: int, bt: float, span: int = 4) -> np.ndarray:
    # Classic GMSK pulse: Gaussian response to an NRZ symbol stream.
    t = np.arange(-span * sps // 2, span * sps // 2 + 1, dtype=float) / sps
    alpha = math.sqrt(2.0 * math.pi / math.log(2.0)) * bt
    taps = alpha * np.exp(-2.0 * math.pi**2 * bt**2 * t**2 / math.log(2.0))
    return taps / taps.sum()


def _bandlimited_noise(rng: np.random.Generator, n: int, cutoff_frac: float) -> np.ndarray:
    """Real zero-mean Gaussian noise brick-wall filtered to ``cutoff_frac`` of fs."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    k_max = max(1, int(round(cutoff_frac * n)))
    spectrum[k_max:] = 0.0
    message = np.fft.irfft(spectrum, n)
    rms = np.sqrt(np.mean(message**2))
    return message / rms if rms > 0 else message


def _analytic_signal(m: np.ndarray) -> np.ndarray:
    """FFT-based analytic signal (positive-frequency content only)."""
    spectrum = np.fft.fft(m)
    n = len(m)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[n // 2] = 1.0
        gain[1 : n // 2] = 2.0
    else:
        gain[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * gain)


def _baseband(name: str, n: int, sps: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-power complex baseband x(i) of length n for one modulation."""
    if name in _CONSTELLATIONS:
        points = _CONSTELLATIONS[name]
        n_symbols = -(-n // sps)
        symbols = points[rng.integers(0, len(points), n_symbols)]
        return np.repeat(symbols, sps)[:n]
    if name == "CPFSK":
        n_symbols = -(-n // sps)
        nrz = np.repeat(_nrz_symbols(rng, n_symbols), sps)[:n]
        phase = np.cumsum(math.pi * _CPFSK_MOD_INDEX * nrz / sps)
        return np.exp(1j * phase)
    if name == "GFSK":
        n_symbols = -(-n // sps) + 4  # margin for filter edges
        nrz = np.repeat(_nrz_symbols(rng, n_symbols), sps)
        shaped = np.convolve(nrz, _gaussian_taps(sps, _GFSK_BT), mode="same")[:n]
        phase = np.cumsum(math.pi * _CPFSK_MOD_INDEX * shaped / sps)
        return np.exp(1j * phase)
    if name == "WBFM":
        message = _bandlimited_noise(rng, n, _ANALOG_CUTOFF_FRAC)
        phase = 2.0 * math.pi * _FM_DEVIATION * np.cumsum(message)
        return np.exp(1j * phase)
    if name == "AM-DSB":
        message = _bandlimited_noise(rng, n, _ANALOG_CUTOFF_FRAC)
        x = (1.0 + _AM_MOD_INDEX * message).astype(complex)
        return _unit_power(x)
    if name == "AM-SSB":
        message = _bandlimited_noise(rng, n, _ANALOG_CUTOFF_FRAC)
        return _unit_power(_analytic_signal(message))
    raise ConfigurationError(f"unsupported modulation name: {name!r}")


# ---------------------------------------------------------------------------
# Single-waveform synthesis
# ---------------------------------------------------------------------------

@dataclass
class SynthesisParams:
    """Channel and noise parameters for one synthesized waveform.

    ``channel_gain`` is a positive scalar or a per-sample sequence,
    ``freq_offset`` is in radians/sample, ``phase_offset`` in radians.
    ``target_snr_db`` of ``None`` (or +inf) synthesizes without noise.
    """

    channel_gain: float | np.ndarray = 1.0
    freq_offset: float = 0.0
    phase_offset: float = 0.0
    target_snr_db: float | None = 0.0
    samples_per_symbol: int = 8
    rng_seed: int = 0

    def validate(self) -> None:
        gain = np.asarray(self.channel_gain, dtype=float)
        if not np.all(gain > 0):
            raise ConfigurationError("channel_gain must be positive")
        if gain.ndim not in (0, 1) or (gain.ndim == 1 and len(gain) != N_SAMPLES):
            raise ConfigurationError("channel_gain must be scalar or per-sample sequence")
        if self.samples_per_symbol < 1:
            raise ConfigurationError("samples_per_symbol must be a positive integer")


@dataclass
class SignalExample:
    """One [2, 128] I/Q waveform with modulation label and SNR tag.

    Row 0 is in-phase, row 1 quadrature.  ``snr_db`` is ``None`` only for
    noiseless standalone synthesis; dataset examples carry a grid value.
    """

    iq: np.ndarray
    label: int
    snr_db: int | None

    def validate(self, snr_grid: tuple[int, ...] | None = SNR_GRID) -> None:
        if self.iq.shape != (2, N_SAMPLES):
            raise DataError(f"waveform shape {self.iq.shape} != (2, {N_SAMPLES})")
        if not np.all(np.isfinite(self.iq)):
            raise DataError("waveform contains non-finite values")
        if snr_grid is not None and self.snr_db is not None and self.snr_db not in snr_grid:
            raise DataError(f"snr_db {self.snr_db} outside grid {snr_grid}")


def synthesize_waveform(mod: ModulationClass | str, params: SynthesisParams) -> SignalExample:
    """Synthesize one received waveform y(i) = A(i) e^{j(w i + phi)} x(i) + n(i).

    The baseband x(i) is drawn from the modulation's constellation (digital)
    or a band-limited Gaussian message (analog), at unit average power.
    Complex white Gaussian noise is scaled so that the mean received signal
    power over the noise power equals ``target_snr_db``, with the noise
    variance split equally across the I and Q components.  Symbol/message and
    noise draws come from independent substreams of ``rng_seed``, so the same
    seed reproduces the same clean signal at any SNR.
    """
    if isinstance(mod, str):
        mod = ModulationClass.from_name(mod)
    params.validate()

    seed_seq = np.random.SeedSequence(params.rng_seed & _MASK64)
    symbol_seed, noise_seed = seed_seq.spawn(2)
    x = _baseband(mod.name, N_SAMPLES, params.samples_per_symbol, np.random.default_rng(symbol_seed))

    i = np.arange(N_SAMPLES)
    carrier = np.asarray(params.channel_gain, dtype=float) * np.exp(
        1j * (params.freq_offset * i + params.phase_offset)
    )
    y = carrier * x

    snr_tag: int | None = None
    if params.target_snr_db is not None and math.isfinite(params.target_snr_db):
        signal_power = float(np.mean(np.abs(y) ** 2))
        noise_var = signal_power / 10.0 ** (params.target_snr_db / 10.0)
        rng_noise = np.random.default_rng(noise_seed)
        noise = np.sqrt(noise_var / 2.0) * (
            rng_noise.standard_normal(N_SAMPLES) + 1j * rng_noise.standard_normal(N_SAMPLES)
        )
        y = y + noise
        snr_tag = int(round(params.target_snr_db))

    iq = np.stack([y.real, y.imag])
    if not np.all(np.isfinite(iq)):
        raise SynthesisError(f"non-finite output for {mod.name} with {params}")
    return SignalExample(iq=iq, label=mod.index, snr_db=snr_tag)


# ---------------------------------------------------------------------------
# Dataset container
# ---------------------------------------------------------------------------

@dataclass
class DatasetManifest:
    classes: list[str]
    snr_grid: list[int]
    examples_per_cell: int
    total: int
    storage_paths: dict[str, str]
    format_version: int = FORMAT_VERSION
    seed: int = 0

    def __post_init__(self) -> None:
        expected = len(self.classes) * len(self.snr_grid) * self.examples_per_cell
        if self.total != expected:
            raise DataError(f"manifest total {self.total} != {expected} (grid product)")

    @property
    def n_cells(self) -> int:
        return len(self.classes) * len(self.snr_grid)

    def cell_order(self) -> list[tuple[str, int]]:
        """Cells in id order: class-major, SNR ascending within a class."""
        return [(c, s) for c in self.classes for s in self.snr_grid]

    def cell_ids(self, cell_index: int) -> np.ndarray:
        base = cell_index * self.examples_per_cell
        return np.arange(base, base + self.examples_per_cell, dtype=np.int64)

    def to_json(self) -> str:
        payload = {
            "classes": self.classes,
            "snr_grid": self.snr_grid,
            "examples_per_cell": self.examples_per_cell,
            "total": self.total,
            "storage_paths": self.storage_paths,
            "format_version": self.format_version,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        payload = json.loads(text)
        return cls(**payload)


@dataclass
class Dataset:
    """In-memory dataset: waveforms plus per-example label and SNR tags.

    Arrays are aligned with manifest id order.
    """

    iq: np.ndarray       # [N, 2, 128] float32
    labels: np.ndarray   # [N] int64, modulation class index
    snrs: np.ndarray     # [N] int64, dB
    manifest: DatasetManifest

    def __len__(self) -> int:
        return len(self.iq)


def _shard_name(class_name: str, snr_db: int) -> str:
    return f"{class_name}_{snr_db}.f32"


def _cell_rng(seed: int, class_index: int, snr_db: int) -> np.random.Generator:
    # Independent substream per (seed, class, snr): parallel generation of
    # cells is byte-identical to serial generation.
    return np.random.default_rng([seed & _MASK64, class_index, snr_db + (1 << 16)])


def _synthesize_cell(
    mod: ModulationClass,
    snr_db: int,
    n_examples: int,
    seed: int,
    samples_per_symbol: int,
    freq_offset_max: float,
) -> np.ndarray:
    rng = _cell_rng(seed, mod.index, snr_db)
    out = np.empty((n_examples, 2, N_SAMPLES), dtype=np.float32)
    for j in range(n_examples):
        params = SynthesisParams(
            channel_gain=1.0,
            freq_offset=rng.uniform(-freq_offset_max, freq_offset_max),
            phase_offset=rng.uniform(0.0, 2.0 * math.pi),
            target_snr_db=float(snr_db),
            samples_per_symbol=samples_per_symbol,
            rng_seed=int(rng.integers(0, 1 << 63)),
        )
        example = synthesize_waveform(mod, params)
        out[j] = example.iq.astype(np.float32)
    return out


def generate_dataset(
    out_dir: str | Path,
    classes: list[str] | None = None,
    snr_grid: list[int] | None = None,
    examples_per_cell: int = 1000,
    seed: int = 0,
    samples_per_symbol: int = 8,
    freq_offset_max: float = 0.01,
    overwrite: bool = False,
) -> DatasetManifest:
    """Synthesize a full (class x SNR) grid and write the container to disk.

    Fully reproducible from ``seed``: the same arguments produce
    byte-identical shards.
    """
    classes = sorted(classes) if classes is not None else list(MODULATION_NAMES)
    snr_grid = sorted(snr_grid) if snr_grid is not None else list(SNR_GRID)
    if not snr_grid:
        raise ConfigurationError("snr_grid must be non-empty")
    if examples_per_cell < 1:
        raise ConfigurationError("examples_per_cell must be >= 1")
    for name in classes:
        if name not in MODULATION_NAMES:
            raise ConfigurationError(f"unsupported modulation name: {name!r}")

    out_dir = Path(out_dir)
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists() and not overwrite:
        raise DataError(f"{out_dir} already holds a dataset (pass overwrite=True to replace)")
    out_dir.mkdir(parents=True, exist_ok=True)

    storage_paths: dict[str, str] = {}
    for name in classes:
        mod = ModulationClass.from_name(name)
        for snr_db in snr_grid:
            shard = _synthesize_cell(
                mod, snr_db, examples_per_cell, seed, samples_per_symbol, freq_offset_max
            )
            rel_path = _shard_name(name, snr_db)
            (out_dir / rel_path).write_bytes(np.ascontiguousarray(shard, dtype="<f4").tobytes())
            storage_paths[f"{name}_{snr_db}"] = rel_path

    manifest = DatasetManifest(
        classes=classes,
        snr_grid=snr_grid,
        examples_per_cell=examples_per_cell,
        total=len(classes) * len(snr_grid) * examples_per_cell,
        storage_paths=storage_paths,
        seed=seed,
    )
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def load_container(dataset_dir: str | Path) -> Dataset:
    """Load an internal container directory written by :func:`generate_dataset`."""
    dataset_dir = Path(dataset_dir)
    manifest_path = dataset_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json under {dataset_dir}")
    manifest = DatasetManifest.from_json(manifest_path.read_text(encoding="utf-8"))

    epc = manifest.examples_per_cell
    iq = np.empty((manifest.total, 2, N_SAMPLES), dtype=np.float32)
    labels = np.empty(manifest.total, dtype=np.int64)
    snrs = np.empty(manifest.total, dtype=np.int64)
    for cell_index, (name, snr_db) in enumerate(manifest.cell_order()):
        rel = manifest.storage_paths.get(f"{name}_{snr_db}")
        if rel is None:
            raise DataError(f"manifest missing shard entry for cell {name}@{snr_db}dB")
        raw = np.fromfile(dataset_dir / rel, dtype="<f4")
        expected = epc * 2 * N_SAMPLES
        if raw.size != expected:
            raise DataError(f"shard {rel} holds {raw.size} floats, expected {expected}")
        lo = cell_index * epc
        iq[lo : lo + epc] = raw.reshape(epc, 2, N_SAMPLES)
        labels[lo : lo + epc] = manifest.classes.index(name)
        snrs[lo : lo + epc] = snr_db
    return Dataset(iq=iq, labels=labels, snrs=snrs, manifest=manifest)


# ---------------------------------------------------------------------------
# Upstream (public RadioML-style) ingestion
# ---------------------------------------------------------------------------

def load_upstream(path: str | Path) -> Dataset:
    """Ingest the public pickle distribution keyed by (modulation, snr).

    Each value must be an array of shape [examples_per_cell, 2, 128]; the
    per-cell count must be uniform.  Class indices are assigned by sorted
    modulation name.
    """
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = pickle.load(fh, encoding="latin1")
    except OSError as exc:
        raise IngestionError(f"cannot read upstream file {path}: {exc}") from exc
    except Exception as exc:  # malformed pickle
        raise IngestionError(f"cannot unpickle upstream file {path}: {exc}") from exc

    if not isinstance(raw, dict) or not raw:
        raise IngestionError("no cells found")

    cells: dict[tuple[str, int], np.ndarray] = {}
    for key, value in raw.items():
        if not (isinstance(key, tuple) and len(key) == 2):
            raise IngestionError(f"unknown key {key!r}: expected (modulation, snr) tuple")
        name, snr = key
        if isinstance(name, bytes):
            name = name.decode("latin1")
        if name not in MODULATION_NAMES:
            raise IngestionError(f"unknown key {key!r}: modulation {name!r} not recognized")
        try:
            snr = int(snr)
        except (TypeError, ValueError):
            raise IngestionError(f"unknown key {key!r}: non-integer snr") from None
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[1:] != (2, N_SAMPLES):
            raise IngestionError(
                f"cell {name}@{snr}dB has shape {arr.shape}, expected (n, 2, {N_SAMPLES})"
            )
        cells[(name, snr)] = arr

    classes = sorted({name for name, _ in cells})
    snr_grid = sorted({snr for _, snr in cells})
    # expected per-cell count: the majority count, ties resolved by the first
    # cell in sorted order, so the error names the odd cell out
    tally = Counter(arr.shape[0] for arr in cells.values())
    top = max(tally.values())
    candidates = {count for count, times in tally.items() if times == top}
    first_count = cells[min(cells)].shape[0]
    epc = first_count if first_count in candidates else min(candidates)
    for (name, snr), arr in sorted(cells.items()):
        if arr.shape[0] != epc:
            raise IngestionError(
                f"cell {name}@{snr}dB holds {arr.shape[0]} examples, expected {epc}"
            )
    missing = [
        (c, s) for c in classes for s in snr_grid if (c, s) not in cells
    ]
    if missing:
        raise IngestionError(f"grid incomplete, first missing cell: {missing[0]}")

    manifest = DatasetManifest(
        classes=classes,
        snr_grid=snr_grid,
        examples_per_cell=epc,
        total=len(classes) * len(snr_grid) * epc,
        storage_paths={},
        seed=0,
    )
    iq = np.empty((manifest.total, 2, N_SAMPLES), dtype=np.float32)
    labels = np.empty(manifest.total, dtype=np.int64)
    snrs = np.empty(manifest.total, dtype=np.int64)
    for cell_index, (name, snr_db) in enumerate(manifest.cell_order()):
        lo = cell_index * epc
        iq[lo : lo + epc] = cells[(name, snr_db)]
        labels[lo : lo + epc] = classes.index(name)
        snrs[lo : lo + epc] = snr_db
    return Dataset(iq=iq, labels=labels, snrs=snrs, manifest=manifest)


# ---------------------------------------------------------------------------
# Stratified splitting
# ---------------------------------------------------------------------------

@dataclass
class SplitSpec:
    """Test carve-out plus train/validation division of the remaining pool."""

    test_fraction: float = 0.20
    train_fraction_of_pool: float = 0.90
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError("test_fraction must be in (0, 1)")
        if not 0.0 < self.train_fraction_of_pool <= 1.0:
            raise ConfigurationError("train_fraction_of_pool must be in (0, 1]")


@dataclass
class Split:
    train_ids: np.ndarray
    val_ids: np.ndarray
    test_ids: np.ndarray
    spec: SplitSpec
    total: int

    def to_json(self) -> str:
        payload = {
            "format_version": FORMAT_VERSION,
            "seed": self.spec.seed,
            "test_fraction": self.spec.test_fraction,
            "train_fraction_of_pool": self.spec.train_fraction_of_pool,
            "total": self.total,
            "train_ids": self.train_ids.tolist(),
            "val_ids": self.val_ids.tolist(),
            "test_ids": self.test_ids.tolist(),
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Split":
        payload = json.loads(text)
        spec = SplitSpec(
            test_fraction=payload["test_fraction"],
            train_fraction_of_pool=payload["train_fraction_of_pool"],
            seed=payload["seed"],
        )
        return cls(
            train_ids=np.asarray(payload["train_ids"], dtype=np.int64),
            val_ids=np.asarray(payload["val_ids"], dtype=np.int64),
            test_ids=np.asarray(payload["test_ids"], dtype=np.int64),
            spec=spec,
            total=payload["total"],
        )


def _per_cell_counts(cell_sizes: list[int], fraction: float, rng: np.random.Generator) -> list[int]:
    """Floor the per-cell proportional target, then grant the global remainder
    one-by-one in seeded shuffled cell order."""
    base = [int(math.floor(fraction * m + 1e-9)) for m in cell_sizes]
    target_total = int(round(fraction * sum(cell_sizes)))
    remainder = max(0, target_total - sum(base))
    counts = list(base)
    for cell in rng.permutation(len(cell_sizes)):
        if remainder == 0:
            break
        if counts[cell] < cell_sizes[cell]:
            counts[cell] += 1
            remainder -= 1
    return counts


def split_dataset(manifest: DatasetManifest, spec: SplitSpec) -> Split:
    """Deterministic stratified split into (train, val, test) id lists.

    The test subset is carved first, per (class, snr) cell; the remaining
    pool is divided into train (``train_fraction_of_pool``) and validation.
    The test ids depend only on (seed, test_fraction), so sweeping the train
    fraction under one seed keeps the test set fixed.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed & _MASK64)
    epc = manifest.examples_per_cell
    n_cells = manifest.n_cells
    cell_sizes = [epc] * n_cells

    test_counts = _per_cell_counts(cell_sizes, spec.test_fraction, rng)
    pool_sizes = [epc - t for t in test_counts]
    train_counts = _per_cell_counts(pool_sizes, spec.train_fraction_of_pool, rng)

    train_parts, val_parts, test_parts = [], [], []
    for cell_index in range(n_cells):
        ids = manifest.cell_ids(cell_index)
        order = rng.permutation(epc)
        t, k = test_counts[cell_index], train_counts[cell_index]
        test_parts.append(ids[order[:t]])
        train_parts.append(ids[order[t : t + k]])
        val_parts.append(ids[order[t + k :]])

    train_ids = np.sort(np.concatenate(train_parts))
    val_ids = np.sort(np.concatenate(val_parts))
    test_ids = np.sort(np.concatenate(test_parts))
    for name, ids in (("train", train_ids), ("validation", val_ids), ("test", test_ids)):
        if len(ids) == 0:
            raise SplitError(f"{name} subset is empty under {spec}")
    return Split(train_ids=train_ids, val_ids=val_ids, test_ids=test_ids,
                 spec=spec, total=manifest.total)


def save_split(split: Split, path: str | Path) -> None:
    Path(path).write_text(split.to_json(), encoding="utf-8")


def load_split(path: str | Path) -> Split:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no split file at {path}")
    return Split.from_json(path.read_text(encoding="utf-8"))
