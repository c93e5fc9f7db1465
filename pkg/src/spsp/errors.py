"""Exception types shared across the package."""


class SPSPError(Exception):
    """Base class for all package errors."""

    #: exit code used by the command-line interface
    exit_code = 1


class InputError(SPSPError):
    exit_code = 2


class NumericalError(SPSPError):
    exit_code = 3


class ConfigError(SPSPError):
    exit_code = 4


class ConstantColumn(InputError):
    def __init__(self, column: int, name: str | None = None):
        self.column = column
        label = name if name is not None else str(column)
        super().__init__(f"column {label} has zero variance")


class NonFinite(InputError):
    def __init__(self, what: str = "input"):
        super().__init__(f"{what} contains NaN or infinite entries")


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line}"
            if offset is not None:
                where += f", byte offset {offset}"
            where += ")"
        super().__init__(message + where)


class BadD(InputError):
    pass


class BadGrid(ConfigError):
    pass


class BadFolds(ConfigError):
    pass


class UnknownDesign(ConfigError):
    pass


class UnknownMethod(ConfigError):
    pass


class EmptyPath(InputError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, lam: float, n_iter: int):
        self.lam = lam
        self.n_iter = n_iter
        super().__init__(f"coordinate descent did not converge at lambda={lam:.6g} after {n_iter} sweeps")


class SingularSystem(NumericalError):
    pass


class SingularGram(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass
