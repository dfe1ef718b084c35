"""Exception hierarchy.

Each class carries an ``exit_code`` so the CLI can map failures onto
distinct process exit statuses without a lookup table.
"""


class ZeemanQGTError(Exception):
    exit_code = 1


class ConfigError(ZeemanQGTError, ValueError):
    exit_code = 2


class ModelEvaluationError(ZeemanQGTError):
    exit_code = 2

    def __init__(self, message, k=None):
        self.k = k
        if k is not None:
            message = f"{message} (at k={tuple(float(x) for x in k)})"
        super().__init__(message)


class NodeProximityError(ZeemanQGTError, ValueError):
    """|d(k)| fell below the node guard; matrix elements are singular there."""

    exit_code = 4


class GridError(ZeemanQGTError, ValueError):
    exit_code = 2


class ContourError(ZeemanQGTError, ValueError):
    exit_code = 2


class UndersampledContourError(ContourError):
    exit_code = 2


class PlanarityError(ZeemanQGTError, ValueError):
    exit_code = 2


class ConvergenceError(ZeemanQGTError):
    exit_code = 3

    def __init__(self, message, value=None, value_doubled=None, cutoffs=None):
        self.value = value
        self.value_doubled = value_doubled
        self.cutoffs = cutoffs
        super().__init__(message)


class UnknownGroupError(ZeemanQGTError, KeyError):
    exit_code = 2

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ValidationFailure(ZeemanQGTError):
    exit_code = 5


class FitError(ZeemanQGTError, ValueError):
    exit_code = 2
