"""Exception hierarchy.

Every domain error carries a short ``code`` attribute so the command line
front end can print a machine-parseable one-line diagnostic.
"""


class PhotocountError(ValueError):
    """Base class for all domain errors raised by this package."""

    code = "PhotocountError"


class EmptyInput(PhotocountError):
    code = "EmptyInput"


class NegativeEntry(PhotocountError):
    code = "NegativeEntry"


class NotNormalized(PhotocountError):
    code = "NotNormalized"


class NonFiniteInput(PhotocountError):
    code = "NonFiniteInput"


class InvalidParameter(PhotocountError):
    code = "InvalidParameter"


class EtaZero(InvalidParameter):
    """Raised when a zero detection efficiency reaches the inverse transform."""

    code = "EtaZero"


class DimensionMismatch(PhotocountError):
    code = "DimensionMismatch"


class IndexOutOfRange(PhotocountError):
    code = "IndexOutOfRange"


class BadConfig(PhotocountError):
    code = "BadConfig"
