"""Exception types shared across the library.

All validation failures derive from ValueError so callers can treat
"bad input" uniformly, while still being able to catch the precise
condition when it matters (e.g. the CLI maps them to exit codes).
"""


class GridMismatchError(ValueError):
    """Two sampled objects do not live on the same time grid."""


class GridAlignmentError(ValueError):
    """A long observation grid lacks the segment structure required to cut copies."""


class NotPositiveSemidefiniteError(ValueError):
    """A matrix that must be positive semidefinite has a significantly negative eigenvalue."""


class AliasingError(ValueError):
    """The requested basis dimension is too large for the grid resolution."""


class InconsistentInitialConditionError(ValueError):
    """Paths do not start at the initial value announced by the configuration."""
