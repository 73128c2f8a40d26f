"""Exception hierarchy for the GeLasso toolkit.

``InputError`` subclasses describe problems with user-supplied data or
options (CLI exit code 1); ``NumericalError`` subclasses describe estimation
failures (CLI exit code 2).
"""
from typing import Optional, Sequence


class GeLassoError(Exception):
    """Base class for all toolkit errors"""
    exit_code = 2


class InputError(GeLassoError):
    """Malformed or out-of-domain input"""
    exit_code = 1


class NumericalError(GeLassoError):
    """Estimation or construction failure"""
    exit_code = 2


class TooFewRows(InputError):
    def __init__(self, n_rows: int, minimum: int = 2):
        super().__init__(f"Need at least {minimum} rows, got {n_rows}")
        self.n_rows = n_rows


class ZeroVariance(InputError):
    def __init__(self, column: int):
        super().__init__(f"Column {column} has zero variance")
        self.column = column


class DimensionMismatch(InputError):
    def __init__(self, left: Sequence[int], right: Sequence[int]):
        super().__init__(f"Dimension mismatch: {tuple(left)} vs {tuple(right)}")
        self.left = tuple(left)
        self.right = tuple(right)


class EmptyInput(InputError):
    pass


class ConfigError(InputError):
    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class AllZeroCorrelations(InputError):
    """Every off-diagonal correlation is zero; only the empty network is a candidate"""

    def __init__(self):
        super().__init__("All off-diagonal correlations are zero")


class RhoOutOfRange(NumericalError):
    def __init__(self, rho: float):
        super().__init__(f"Correlation {rho} is outside (-1, 1)")
        self.rho = rho


class DegenerateTable(NumericalError):
    def __init__(self, message: str, columns: Optional[Sequence[int]] = None):
        if columns is not None:
            message = f"{message} (columns {tuple(columns)})"
        super().__init__(message)
        self.columns = tuple(columns) if columns is not None else None


class NotPD(NumericalError):
    def __init__(self, min_eigenvalue: float, what: str = "matrix"):
        super().__init__(f"{what} is not positive definite "
                         f"(smallest eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


class NonPDInput(NotPD):
    pass


class NonPositiveDiagonal(NumericalError):
    def __init__(self, index: int, value: float):
        super().__init__(f"Precision diagonal entry {index} is not positive ({value})")
        self.index = index


class NotConverged(NumericalError):
    def __init__(self, max_iter: int, lambda_index: Optional[int] = None):
        where = f" at lambda index {lambda_index}" if lambda_index is not None else ""
        super().__init__(f"Glasso did not converge in {max_iter} sweeps{where}")
        self.max_iter = max_iter
        self.lambda_index = lambda_index


class NotRepairable(NumericalError):
    pass


class GenerationFailed(NumericalError):
    pass


class NoTrueEdges(NumericalError):
    def __init__(self):
        super().__init__("True network has no edges; sensitivity is undefined")


class NoTrueNonEdges(NumericalError):
    def __init__(self):
        super().__init__("True network is complete; specificity is undefined")
