"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    pass


class NotSymmetric(ValueError):
    pass


class SingularMetric(ArithmeticError):
    """Raised when a diagonal metric entry vanishes and cannot be inverted."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"metric entry g[{index}] = {value!r} is not invertible; regularize the angles first")


class NotRealHamiltonian(ValueError):
    """A Pauli sum whose projection onto the chosen basis has an imaginary entry."""

    def __init__(self, row: int, col: int, imag: float, labels=None):
        self.row = row
        self.col = col
        self.imag = imag
        where = f"({row}, {col})"
        if labels is not None:
            where += f" <{labels[row]}|H|{labels[col]}>"
        super().__init__(f"projected matrix element {where} has imaginary part {imag!r}")


class NotInvariant(ValueError):
    pass


class LineSearchFailed(RuntimeError):
    def __init__(self, message: str, best_eta: float | None = None, trials: int = 0):
        self.best_eta = best_eta
        self.trials = trials
        super().__init__(message)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class RunAborted(RuntimeError):
    """An optimizer run gave up; ``trace`` holds every epoch completed so far."""

    def __init__(self, message: str, trace):
        self.trace = trace
        super().__init__(message)


class ConfigError(ValueError):
    pass
