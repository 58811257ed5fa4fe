"""Exceptions raised by frdkit"""


class FrdError(Exception):
    """An exception class that frdkit can raise for errors."""
    category = 'error'
    exit_code = 1


class InvalidInputError(FrdError):
    """An argument is outside the domain an operation accepts."""
    category = 'invalid-input'
    exit_code = 2


class InvalidBandwidthError(InvalidInputError):
    """A bandwidth is not strictly positive and finite."""
    category = 'invalid-bandwidth'


class PreconditionError(FrdError):
    """The data do not satisfy the conditions an estimator needs."""
    category = 'precondition'
    exit_code = 3


class InsufficientSampleError(PreconditionError):
    """Too few observations (or degrees of freedom) in the window."""
    category = 'insufficient-sample'


class IllConditionedDesignError(FrdError):
    """A moment matrix or Schur complement is numerically singular."""
    category = 'ill-conditioned-design'
    exit_code = 4


class DegenerateDenominatorError(FrdError):
    """The treatment jump is zero to machine precision."""
    category = 'degenerate-denominator'
    exit_code = 5


class NoIdentificationError(FrdError):
    """No treatment variation is left after partialling out the controls."""
    category = 'no-identification'
    exit_code = 5


class CollinearCovariatesError(FrdError):
    """Covariates are collinear with the polynomial regressors."""
    category = 'collinear-covariates'
    exit_code = 4


class DegenerateVarianceError(FrdError):
    """A test statistic was requested with a zero variance."""
    category = 'degenerate-variance'
    exit_code = 5


class DataFormatError(FrdError):
    """A data file can't be turned into a sample."""
    category = 'data-format'
    exit_code = 6


class MissingColumnError(DataFormatError):
    """A column named in the schema isn't in the file."""
    category = 'missing-column'


class NonBinaryTreatmentError(DataFormatError):
    """The treatment column has values other than 0 and 1."""
    category = 'non-binary-treatment'


class EmptySummaryError(FrdError):
    """Every replication of a simulation was degenerate."""
    category = 'empty-summary'
    exit_code = 7


class InvariantViolation(FrdError):
    """An internal invariant was broken (this is a bug)."""
    category = 'internal-invariant'
    exit_code = 70
