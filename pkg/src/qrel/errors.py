"""Exception hierarchy shared by every qrel module."""


class QrelError(Exception):
    """Base class for all qrel errors."""

    kind = "QrelError"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


class TargetNotZero(QrelError):
    kind = "TargetNotZero"


class ZeroNorm(QrelError):
    kind = "ZeroNorm"


class InvalidFraction(QrelError):
    kind = "InvalidFraction"


class InvalidSimilarity(QrelError):
    kind = "InvalidSimilarity"


class FieldOverflow(QrelError):
    kind = "FieldOverflow"

    def __init__(self, field: str, value: int, width: int):
        super().__init__(
            f"value {value} does not fit field {field!r} of width {width} bits"
        )
        self.field = field


class UnknownField(QrelError):
    kind = "UnknownField"

    def __init__(self, field: str, available=()):
        msg = f"unknown field {field!r}"
        if available:
            msg += f" (available: {', '.join(available)})"
        super().__init__(msg)
        self.field = field


class SchemaMismatch(QrelError):
    kind = "SchemaMismatch"


class QubitBudgetExceeded(QrelError):
    kind = "QubitBudgetExceeded"

    def __init__(self, needed: int, budget: int, where: str = ""):
        msg = f"needs {needed} qubits but the budget is {budget}"
        if where:
            msg = f"{where} {msg}"
        super().__init__(msg)
        self.needed = needed
        self.budget = budget


class EmptySelection(QrelError):
    kind = "EmptySelection"


class EmptyJoin(QrelError):
    kind = "EmptyJoin"


class NotPrimaryKey(QrelError):
    kind = "NotPrimaryKey"


class RelationFormatError(QrelError):
    """Malformed relation file. Carries the 1-based line number when known."""

    kind = "FileError"

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = path or "<relation>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


class QuerySyntaxError(QrelError):
    kind = "SyntaxError"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
