"""Exception hierarchy shared by all coreplan modules."""


class CoreplanError(Exception):
    """Base class for every error raised by coreplan."""


class ValidationError(CoreplanError, ValueError):
    """An input value is outside its allowed range."""


class ParseError(ValidationError):
    def __init__(self, message, line=None, field=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class ConvergenceError(CoreplanError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class InfeasibleError(CoreplanError):
    """The deadline admits no processing slot."""


class ResourceError(CoreplanError):
    """The analytic core requirement exceeds the available cores."""

    def __init__(self, available, required):
        super().__init__(
            f"{available} available cores < {required} required by the lower bound"
        )
        self.available = available
        self.required = required


class QueryFailure(CoreplanError):
    def __init__(self, message, completed):
        super().__init__(f"{message} ({completed} queries completed)")
        self.completed = completed
