"""Exception hierarchy.

Data problems (bad files, out-of-range entries) derive from :class:`DataError`;
failures of the numerical pipeline derive from :class:`NumericalError`.  The
command line maps the two families to different exit codes.
"""


class GomError(Exception):
    """Base class for every error raised by this package."""


class DataError(GomError, ValueError):
    """Input data could not be parsed or violates a data invariant."""


class FormatError(DataError):
    """A file does not parse under its declared format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(DataError):
    """An entry lies outside ``{0, ..., M}`` or is not an integer."""

    def __init__(self, message, position=None, value=None):
        self.position = position
        self.value = value
        super().__init__(message)


class DegenerateInputError(DataError):
    """The input carries no usable signal (e.g. every row is zero)."""


class NumericalError(GomError, ArithmeticError):
    """A numerical stage of an estimator failed.

    ``stage`` names the pipeline step that failed, when known.
    """

    def __init__(self, message, stage=None):
        self.stage = stage
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)


class SingularityError(NumericalError):
    """A zero degree with ``tau = 0`` makes the Laplacian undefined."""


class RankDeficiencyError(NumericalError):
    """Fewer than ``k`` directions carry energy."""


class IllConditionedError(NumericalError):
    """A small dense system is too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=None, stage=None):
        self.condition = condition
        super().__init__(message, stage=stage)


class DegenerateRowError(NumericalError):
    """A row has (numerically) zero norm and cannot be normalized."""

    def __init__(self, message, row=None, stage=None):
        self.row = row
        super().__init__(message, stage=stage)


class NoConeError(NumericalError):
    """The points do not lie in an open half-space through the origin."""


class InsufficientCornersError(NumericalError):
    """SVM-cone could not find ``k`` corner candidates."""


class SelectionError(NumericalError):
    """Every fit in a model-selection scan failed."""
