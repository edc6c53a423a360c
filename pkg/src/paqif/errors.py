"""Exception types shared by all solver layers."""


class PaqifError(Exception):
    """Base class for all solver errors."""


class ContractViolationError(PaqifError):
    """An operation was called with inputs violating its preconditions."""


class UnsupportedOrderError(PaqifError):
    """The interlocking factorization only accepts even matrix orders."""


class FactorizationBreakdownError(PaqifError):
    """A level 2x2 system was numerically singular.

    Signals a matrix outside the stability class (nonsingular diagonally
    dominant matrices are always safe).
    """

    def __init__(self, level: int, detail: str = ""):
        self.level = level
        msg = f"singular 2x2 block at level {level}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NotPositiveDefiniteError(PaqifError):
    """Cholesky hit a non-positive pivot (bad reduced system)."""


class PartitionError(PaqifError):
    """Requested block partition is incompatible with the matrix."""


class NonConvergenceError(PaqifError):
    """An iterative driver exhausted its iteration budget."""

    def __init__(self, message: str, residual: float = float("nan"),
                 iterations: int = -1):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e}, "
                         f"iterations={iterations})")
