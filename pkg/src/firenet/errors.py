"""Exception hierarchy shared by all firenet modules.

Every error raised by the library derives from FireNetError so callers can
catch broadly; the CLI maps subtrees onto its exit codes (config/usage -> 1,
data -> 2, numerical failure -> 3).
"""


class FireNetError(Exception):
    """Base class for all firenet errors."""


class ShapeError(FireNetError, ValueError):
    """Tensor shapes violate an operation's contract."""


class ConfigError(FireNetError, ValueError):
    """Invalid configuration value or combination."""


class InputError(FireNetError, ValueError):
    """Operation inputs outside the documented domain (labels, fractions, ...)."""


class StateError(FireNetError, RuntimeError):
    """Operation called in the wrong state, e.g. backward without a cached forward."""


class DataError(FireNetError, RuntimeError):
    """Problem with dataset contents or on-disk layout."""


class DecodeError(DataError):
    """Image payload could not be decoded; message carries the sample id."""


class DatasetError(DataError):
    """Dataset directory missing, empty, or malformed."""


class CheckpointError(DataError):
    """Problem reading or validating a weight file."""


class CheckpointFormatError(CheckpointError):
    """Weight file is truncated or not in the expected binary format."""


class CheckpointIntegrityError(CheckpointError):
    """Weight file parsed but tensors do not match the model architecture."""


class NumericalError(FireNetError, RuntimeError):
    """Non-finite value where training cannot meaningfully continue."""
