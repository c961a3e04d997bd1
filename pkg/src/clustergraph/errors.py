"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ValidationError -> 1, ConfigError -> 2,
InternalError -> 3.
"""


class ClusterGraphError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ClusterGraphError):
    """Invalid input data: malformed point cloud, clustering, file, or ids."""


class ConfigError(ClusterGraphError):
    """Invalid configuration or parameter combination."""


class InternalError(ClusterGraphError):
    """An internal invariant was violated; indicates a bug, not bad input."""
