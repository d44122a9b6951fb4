"""Exception types raised across the toolkit.

Everything derives from EvalError so callers (and the CLI) can catch one
base class and turn it into a diagnostic + nonzero exit.
"""


class EvalError(Exception):
    """Base class for all toolkit errors."""


class FormatError(EvalError):
    """A file does not conform to the expected on-disk format."""


class UnsupportedLayout(EvalError):
    """The file parses but uses a layout we deliberately reject
    (non-2D arrays, column-major order)."""


class DataError(EvalError):
    """Invalid values inside otherwise well-formed data."""


class GraphError(EvalError):
    """A question dependency graph is malformed (dangling parent, cycle)."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = list(cycle) if cycle else []


class DuplicateResultError(EvalError):
    """A results row collides with an existing (model, dataset, group,
    hyperparameters, metric, seed) key."""


class InsufficientSamples(EvalError):
    """Not enough rows to compute a metric (optionally names the group)."""

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class ShapeError(EvalError):
    """Mismatched dimensions or row counts."""


class NumericalError(EvalError):
    """A numerical routine failed beyond recoverable tolerance."""


class SpecError(EvalError):
    """An invalid metric/plot/exercise specification."""


class ContractError(EvalError):
    """A metric-state operation was called on a state that does not
    support it (e.g. feeding real references to a conditional metric)."""


class ConflictError(EvalError):
    """Two result files disagree on the value for the same result key."""
