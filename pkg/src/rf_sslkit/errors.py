"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: configuration errors exit 2,
data errors 3, training divergence 4, leakage-guard violations 5.
"""


class RFSSLKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(RFSSLKitError):
    """Invalid configuration value, unknown key, or unsupported option."""


class DataError(RFSSLKitError):
    """Problem with dataset content, storage, or bookkeeping."""


class SynthesisError(DataError):
    """Waveform synthesis produced invalid output."""


class IngestionError(DataError):
    """Upstream dataset file could not be converted."""


class SplitError(DataError):
    """Requested split fractions yield an empty or inconsistent subset."""


class TrainingDivergedError(RFSSLKitError):
    """Non-finite loss encountered; a diagnostic snapshot has been written."""


class LeakageError(RFSSLKitError):
    """Evaluation ids overlap the train/validation ids."""
