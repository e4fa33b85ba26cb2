"""Exception hierarchy shared across the package.

Plain argument mistakes (out-of-range fractions, bad layer indices, ...)
raise builtin ValueError; these classes cover failures with more context.
"""


class TlinvError(Exception):
    """Base class for package-specific failures."""


class FormatError(TlinvError):
    """A file does not follow its declared binary/layout format."""


class DataError(TlinvError):
    """A dataset violates an invariant (inconsistent counts, bad labels, ...)."""


class InsufficientDataError(DataError):
    """A class does not hold enough samples for the requested operation."""


class ShapeError(TlinvError):
    """Tensor/model dimensions are incompatible."""


class ConfigError(TlinvError):
    """An experiment configuration is invalid or incomplete."""


class OptimizationError(TlinvError):
    """An iterative optimization produced non-finite values or cannot proceed."""


class AccessContractError(TlinvError):
    """The target student model was queried by a code path that must not query it."""
