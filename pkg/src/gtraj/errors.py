"""Error hierarchy. Every error exposes a short machine-readable ``error_class``."""


class GtrajError(Exception):
    error_class = "GtrajError"

    def __init__(self, message: str = "", **context):
        self.context = dict(context)
        if context:
            extra = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({extra})" if message else extra
        super().__init__(message)


class DimensionError(GtrajError, ValueError):
    error_class = "DimensionError"


class ValidationError(GtrajError, ValueError):
    error_class = "ValidationError"

    def __init__(self, message: str = "", violations=None, **context):
        self.violations = list(violations or [])
        if self.violations and not message:
            message = "; ".join(self.violations)
        super().__init__(message, **context)


class ParseError(ValidationError):
    error_class = "ParseError"

    def __init__(self, message: str, line: int, column: int = 1, path=None):
        self.line = line
        self.column = column
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}")


class NumericalBlowup(GtrajError, ArithmeticError):
    error_class = "NumericalBlowup"


class StateCorruption(GtrajError, ArithmeticError):
    error_class = "StateCorruption"


class DarkStateJump(GtrajError, RuntimeError):
    error_class = "DarkStateJump"


class PurityAbort(GtrajError, RuntimeError):
    error_class = "PurityAbort"


class ConditioningError(GtrajError, ArithmeticError):
    error_class = "ConditioningError"


class StepError(GtrajError, RuntimeError):
    error_class = "StepError"
