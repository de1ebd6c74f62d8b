"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad argument: wrong shape, out-of-range value, invalid label, ..."""


class CapacityError(RuntimeError):
    """An operation exceeded its configured size budget."""


class IdxParseError(ValueError):
    """An IDX file failed to parse (bad magic, truncation, count mismatch)."""


class DimacsParseError(ValueError):
    """A DIMACS CNF file failed to parse."""


class SamplingTimeoutError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class CheckpointError(RuntimeError):
    """A checkpoint file is corrupt or has an unsupported version."""


class ConfigError(ValueError):
    """A run configuration is malformed or fails schema validation."""
