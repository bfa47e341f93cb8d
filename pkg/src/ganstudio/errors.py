"""Exception types shared across the toolkit."""


class StudioError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(StudioError, ValueError):
    """Invalid configuration: bad generator layout, missing provider, frozen-everything spec."""


class DomainError(StudioError, ValueError):
    """Input outside an operation's domain (non-finite latent, shape mismatch, bad range)."""


class InjectionError(StudioError, ValueError):
    """An injected feature map is incompatible with the synthesis layer consuming it."""


class CheckpointError(StudioError, ValueError):
    """Checkpoint container cannot be read: bad magic, version mismatch, unknown parameter."""


class CheckpointIntegrityError(CheckpointError):
    """Checkpoint container is corrupt or truncated."""


class KnittingError(StudioError, RuntimeError):
    """Adjacent panorama spans disagree inside a constrained region."""

    def __init__(self, message, max_abs_diff=None, span_index=None):
        super().__init__(message)
        self.max_abs_diff = max_abs_diff
        self.span_index = span_index


class InversionDiverged(StudioError, RuntimeError):
    """Inversion hit a non-finite loss; carries the trace collected so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
