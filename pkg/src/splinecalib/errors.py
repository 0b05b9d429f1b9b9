"""Exception hierarchy.

Every error raised by the library derives from :class:`CalibrationError`, and
most also derive from the builtin that best describes them (``ValueError``,
``KeyError`` ...) so callers can catch either way.
"""


class CalibrationError(Exception):
    """Base class for all library errors."""


# -- ingestion ---------------------------------------------------------------

class MissingColumnError(CalibrationError, KeyError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")

    def __str__(self):
        return self.args[0]


class ValueOutOfRangeError(CalibrationError, ValueError):
    def __init__(self, row, value, path=None):
        self.row = row
        self.value = value
        where = f"{path}: " if path else ""
        super().__init__(f"{where}row {row}: score {value!r} outside [0, 1]")


class NonBinaryLabelError(CalibrationError, ValueError):
    def __init__(self, row, value=None, path=None):
        self.row = row
        self.value = value
        where = f"{path}: " if path else ""
        super().__init__(f"{where}row {row}: label {value!r} is not 0 or 1")


class RowSumOutOfRangeError(CalibrationError, ValueError):
    def __init__(self, row, total, path=None):
        self.row = row
        self.total = total
        where = f"{path}: " if path else ""
        super().__init__(
            f"{where}row {row}: probabilities sum to {total!r}, outside [0.99, 1.01]"
        )


class InvalidLabelError(CalibrationError, ValueError):
    pass


class DimensionMismatchError(CalibrationError, ValueError):
    pass


# -- numerics ----------------------------------------------------------------

class TooFewDistinctValuesError(CalibrationError, ValueError):
    pass


class NonFiniteInputError(CalibrationError, ValueError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"non-finite value at row {row}")


class DomainError(CalibrationError, ValueError):
    pass


class AllScoresAreOneError(CalibrationError, ValueError):
    pass


class SingularUpdateError(CalibrationError, ArithmeticError):
    pass


class NonConvergenceError(CalibrationError, ArithmeticError):
    def __init__(self, max_iters, grad_norm):
        self.max_iters = max_iters
        self.grad_norm = grad_norm
        super().__init__(
            f"Newton solver did not converge in {max_iters} iterations "
            f"(gradient max-norm {grad_norm:.3e})"
        )


# -- fitting -----------------------------------------------------------------

class SingleClassDataError(CalibrationError, ValueError):
    pass


class MissingClassInLabelsError(CalibrationError, ValueError):
    def __init__(self, class_index):
        self.class_index = class_index
        super().__init__(f"class {class_index} does not appear in the labels")


class InvalidPMinError(CalibrationError, ValueError):
    pass


class DegenerateFoldError(CalibrationError, ValueError):
    pass


class TooManyFoldsError(CalibrationError, ValueError):
    pass


class TrainerFailureError(CalibrationError, RuntimeError):
    def __init__(self, fold, cause):
        self.fold = fold
        self.cause = cause
        where = "final model" if fold is None else f"fold {fold}"
        super().__init__(f"trainer failed on {where}: {cause}")


class InvalidOptionsError(CalibrationError, ValueError):
    pass


# -- serialization -----------------------------------------------------------

class SchemaVersionMismatchError(CalibrationError, ValueError):
    pass


class CorruptFileError(CalibrationError, ValueError):
    pass
