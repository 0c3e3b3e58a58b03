"""Exception types shared across the runtime, backends, and harness."""


class IPIError(Exception):
    """Base class for all errors raised by this package."""


class ProtocolViolation(IPIError):
    """Stream clock misuse: tick skip/regression, or out-of-order wire seq."""


class WindowBoundsError(IPIError):
    """Requested a frame window outside the stream's valid tick range."""


class ValidationError(IPIError):
    """Input failed a precondition (empty instruction, bad thresholds, ...)."""


class TaskNotFoundError(IPIError):
    """A task reference did not resolve to any known task."""


class AmbiguousTaskError(IPIError):
    """An implicit task reference matched two or more equally recent tasks."""


class TraceParseError(IPIError):
    """A scripted trace file is malformed (schema violation, duplicate key)."""


class TraceCoverageError(IPIError):
    """A scripted run performed a lookup the trace does not cover."""


class CausalityError(IPIError):
    """A consumer tried to observe a frame beyond the current tick."""


class BackendUnavailable(IPIError):
    """A live backend kept failing after the configured retries."""


class BackendConfigError(IPIError):
    """A live backend rejected the request for non-transient reasons (4xx)."""


class ManifestError(IPIError):
    """An evaluation manifest failed schema or cross-reference validation."""


class ConfigError(IPIError):
    """A config file or runtime option set is invalid."""
