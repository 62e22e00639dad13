"""Exception types shared across the pipeline."""


class CorposcopeError(Exception):
    """Base class; CLI maps these to exit code 1 with a parsable message."""


class DataFormatError(CorposcopeError):
    """Input file unreadable, malformed, or text spec matches nothing."""


class UndefinedMetricError(CorposcopeError):
    """A metric is undefined for the given input (too short, too few samples)."""


class ConfigError(CorposcopeError):
    """Invalid configuration value or combination."""


class ProviderError(CorposcopeError):
    """External embedding provider unreachable or returned bad vectors."""


class ProfileError(CorposcopeError):
    """Dataset cannot be profiled (e.g. fewer than two samples)."""


class FitError(CorposcopeError):
    """Scaler/PCA fit impossible on the given matrix."""


class SelectionError(CorposcopeError):
    """Subset ranking or construction is impossible as requested."""


class AnalysisError(CorposcopeError):
    """Correlation/delta analysis cannot proceed (e.g. empty id intersection)."""
