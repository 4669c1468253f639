"""Exception hierarchy.

``UsageError`` covers bad arguments or preconditions on parameters; everything
else derives from ``DataError`` and signals malformed or inconsistent input data.
The CLI maps the two families to distinct exit codes.
"""


class SeqCalError(Exception):
    pass


class UsageError(SeqCalError, ValueError):
    pass


class DataError(SeqCalError, ValueError):
    pass


class DomainError(UsageError):
    """A numeric parameter lies outside its admissible range."""


class SpecInvalid(UsageError):
    pass


class MissingStats(UsageError):
    pass


class IndexOutOfRange(DataError):
    pass


class LengthMismatch(DataError):
    pass


class NotADistribution(DataError):
    pass


class ArgmaxMismatch(DataError):
    pass


class BlankInInput(DataError):
    pass


class AlphabetMismatch(DataError):
    pass


class EmptyRow(DataError):
    pass


class EmptyPrediction(DataError):
    pass


class EmptyInput(DataError):
    pass


class NeedsFullMode(DataError):
    pass


class FormatError(DataError):
    """A log or stats file line could not be parsed."""
