"""Exception hierarchy.

Every error raised on bad input derives from :class:`DataError`; solver
failures derive from :class:`NumericalError`. The CLI maps the two families to
exit codes 2 and 3.
"""


class MdbgError(Exception):
    pass


class DataError(MdbgError, ValueError):
    pass


class NumericalError(MdbgError, ArithmeticError):
    pass


# ingest
class MissingFileError(DataError, FileNotFoundError):
    pass


class RaggedRowsError(DataError):
    def __init__(self, line: int, expected: int, got: int):
        super().__init__(f"line {line}: expected {expected} fields, got {got}")
        self.line = line
        self.expected = expected
        self.got = got


class NonNumericValueError(DataError):
    def __init__(self, line: int, column: str, value: str):
        super().__init__(f"line {line}, column {column!r}: non-numeric value {value!r}")
        self.line = line
        self.column = column
        self.value = value


class SpecOutOfRangeError(DataError):
    pass


class TooShortError(DataError):
    pass


# discretize
class DegenerateRangeError(DataError):
    pass


class EmptyTrainError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class SymbolOutOfRangeError(DataError):
    pass


# mdbg
class OrderTooSmallError(DataError):
    pass


class SeriesTooShortError(DataError):
    pass


class ShapeMismatchError(DataError):
    pass


class MalformedKeyError(DataError):
    pass


# diffusion
class EmptyGraphError(DataError):
    pass


class NoConvergenceError(NumericalError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


# query
class WindowTooShortError(DataError):
    pass


class NoNodesInDimensionError(DataError):
    pass


class NodeNotFoundError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# export
class UnwritableDirectoryError(DataError):
    pass


class IntegrityError(DataError):
    pass


class VersionMismatchError(DataError):
    pass


class MalformedRowError(DataError):
    def __init__(self, filename: str, line: int, reason: str):
        super().__init__(f"{filename}, line {line}: {reason}")
        self.filename = filename
        self.line = line


class MalformedArchiveError(DataError):
    pass


class EmptyBatchError(DataError):
    pass


# forecast
class UnresolvableStateError(DataError):
    pass


class InvalidHorizonError(DataError):
    pass
