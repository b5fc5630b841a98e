"""Exception hierarchy shared by all modules.

The CLI maps every subclass of :class:`CascadeDiversityError` to exit code 1.
"""


class CascadeDiversityError(Exception):
    """Base class for data and parameter errors raised by this package."""


class ParseError(CascadeDiversityError):
    pass


class GraphFormatError(CascadeDiversityError):
    """Graph file has the wrong magic bytes or an unsupported version."""


class GraphCorruptError(CascadeDiversityError):
    """Graph file is truncated or internally inconsistent."""


class PartitionError(CascadeDiversityError):
    pass


class CascadeError(CascadeDiversityError):
    pass


class ParameterError(CascadeDiversityError, ValueError):
    pass
