"""Exception hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI maps it to.
"""


class FCHError(Exception):
    exit_code = 1


class InvalidArgumentError(FCHError, ValueError):
    exit_code = 2


class ConfigError(InvalidArgumentError):
    exit_code = 2


class WellShapeError(FCHError, ValueError):
    """Raised when a potential violates the double-well conditions."""

    exit_code = 2

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = f"well-shape condition failed: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SolverError(FCHError, RuntimeError):
    exit_code = 3

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)


class SingularQuadratureError(SolverError):
    pass


class RootFindError(SolverError):
    pass


class ConditioningError(SolverError):
    pass


class ContractionError(SolverError):
    pass


class TrackingError(SolverError):
    pass


class FredholmError(FCHError, ValueError):
    """Right-hand side is not orthogonal to the kernel of the shifted operator."""

    exit_code = 3

    def __init__(self, projection: float, tolerance: float):
        self.projection = projection
        super().__init__(
            f"Fredholm solvability violated: <f, psi0> = {projection:.3e} "
            f"exceeds tolerance {tolerance:.1e}"
        )


class RegimeError(FCHError, ValueError):
    """Raised when an undulation-only quantity is requested with alpha0 >= 0."""

    exit_code = 4


class ResolutionError(FCHError, ValueError):
    exit_code = 5


class TruncationError(ResolutionError):
    pass


class DimensionError(InvalidArgumentError):
    pass
