"""Exception taxonomy shared by all subsystems."""


class RejectedInputError(ValueError):
    """Input violates a documented precondition (shape, congruence, range)."""


class ProtocolError(RuntimeError):
    """Out-of-order or malformed use of a stateful streaming interface."""


class ConfigurationError(RuntimeError):
    """Components wired together are incompatible (codec/model/cache)."""


class ContractViolation(RuntimeError):
    """An internal postcondition that callers rely on failed."""


class CorruptClipError(RuntimeError):
    """On-disk clip fails checksum or frame-count validation."""


class CorruptCheckpointError(RuntimeError):
    """Checkpoint content does not match its content hash."""


class ResourceError(RuntimeError):
    """A bounded resource (KV cache context) would be exceeded."""


class DivergenceError(RuntimeError):
    """Training produced NaN/Inf losses."""


class NumericalError(RuntimeError):
    """A numerical routine left its validated regime (non-PSD covariance)."""
