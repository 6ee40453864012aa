"""Exception hierarchy shared across the engine."""


class PamforgeError(Exception):
    """Base class for all engine errors."""


class MalformedContainer(PamforgeError):
    """RIFF/WAVE structure is broken (missing chunks, bad sizes)."""


class UnsupportedEncoding(PamforgeError):
    """Valid container but an encoding we do not process (non-PCM, odd depth)."""


class NonIntegerRecordLength(PamforgeError):
    """recordSizeSec x sampleRate does not land on an integer sample count."""


class ClippingRequested(PamforgeError):
    """Synthetic signal amplitude would exceed full scale."""


class ChannelPolicyViolation(PamforgeError):
    """Multichannel input rejected under the 'error' channel policy."""


class RecordTooShort(PamforgeError):
    """Record shorter than one analysis window."""


class LengthMismatch(PamforgeError):
    """Frame length does not match the window length."""


class TolWindowTooShort(PamforgeError):
    """TOL integration window below the 1 s standard minimum."""


class NegativeInput(PamforgeError):
    """Linear power value below zero where only >= 0 is meaningful."""


class InvariantViolation(PamforgeError):
    """Parameter set violates its declared invariants."""


class SchemaError(PamforgeError):
    """Config file does not match the documented schema."""


class BlockTooSmall(PamforgeError):
    """A single record does not fit in the configured block size."""


class MissingBaseline(PamforgeError):
    """Speed-up requested without a concurrency-1 measurement."""


class ParamsMismatch(PamforgeError):
    """Validation attempted across different parameter fingerprints."""


class RecordCountMismatch(PamforgeError):
    """Validation attempted across result sets of different lengths."""
