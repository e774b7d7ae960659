"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes, so every failure the search can hit
belongs to exactly one family.
"""


class AHSCError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(AHSCError, ValueError):
    pass


class LabelError(AHSCError, ValueError):
    pass


class DataError(AHSCError, ValueError):
    pass


class LoadError(DataError):
    """CSV ingestion failure. ``row``/``column`` locate the offending cell when known."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingFileError(LoadError):
    pass


class EmptyBodyError(LoadError):
    pass


class RaggedRowError(LoadError):
    pass


class NonNumericError(LoadError):
    pass


class NonFiniteError(LoadError):
    pass


class NumericError(AHSCError, ArithmeticError):
    """Non-finite value encountered. ``where`` carries the layer index or probe coordinates."""

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} at {where}")
        self.where = where


class SizeError(AHSCError, ValueError):
    pass


class ArchitectureError(AHSCError, ValueError):
    pass


class DegenerateModelError(AHSCError, ValueError):
    pass


class DegenerateInputError(AHSCError, ValueError):
    """Metric undefined on the given input (single class, zero denominator, ...)."""


class NotStronglyConvexError(AHSCError, ValueError):
    pass


class AllDiscardedError(AHSCError):
    def __init__(self, n_configs):
        super().__init__(f"all {n_configs} sampled configurations were discarded (mu_max <= 0)")
        self.n_configs = n_configs
