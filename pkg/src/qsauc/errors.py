"""Exception types shared across the package.

Everything raised on purpose derives from QsaucError so callers can catch
one base. Subclasses carry enough structure for the CLI to emit stable,
machine-readable error lines.
"""


class QsaucError(Exception):
    code = "E_RUNTIME"


class InvalidParameterError(QsaucError, ValueError):
    code = "E_PARAM"


class DimensionMismatchError(QsaucError, ValueError):
    code = "E_DIM"

    def __init__(self, expected: int, got: int, what: str = "input"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class EmptyPoolError(QsaucError, ValueError):
    code = "E_POOL"

    def __init__(self, pool: str):
        self.pool = pool
        super().__init__(f"cannot sample from empty pool '{pool}'")


class ScheduleError(InvalidParameterError):
    """Step-size decay schedule outside the regime with known coefficient bounds."""

    code = "E_SCHEDULE"


class NonFiniteTrainingError(QsaucError, ArithmeticError):
    """Raised when a non-finite value appears during training.

    Carries a diagnostics payload: the iteration index, the offending
    quantity's name, and the hyperparameters in force.
    """

    code = "E_NONFINITE"

    def __init__(self, iteration: int, quantity: str, params: dict):
        self.iteration = iteration
        self.quantity = quantity
        self.params = dict(params)
        super().__init__(
            f"non-finite {quantity} at iteration {iteration}; params: {self.params}"
        )


class ParseError(QsaucError, ValueError):
    code = "E_PARSE"

    def __init__(self, line_no: int, token: str, message: str):
        self.line_no = line_no
        self.token = token
        super().__init__(f"line {line_no}: {message} (token {token!r})")


class ModelFormatError(QsaucError, ValueError):
    code = "E_MODEL"

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class SolverCapError(QsaucError, ValueError):
    code = "E_CAP"

    def __init__(self, n: int, cap: int):
        self.n = n
        self.cap = cap
        super().__init__(
            f"exact solver refused: {n} points exceeds cap {cap} "
            f"(dense pairwise system would need O(n^2) memory and O(n^3) time)"
        )


class SingleClassError(QsaucError, ValueError):
    code = "E_SINGLECLASS"

    def __init__(self, present: int):
        self.present = present
        super().__init__(f"AUC undefined: only class {present:+d} present")


class SplitError(QsaucError, ValueError):
    code = "E_SPLIT"


class ConfigError(QsaucError, ValueError):
    code = "E_CONFIG"
