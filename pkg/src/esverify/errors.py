"""Exception hierarchy shared by every module."""


class ESVerifyError(Exception):
    """Base class for all library errors."""


class ModelError(ESVerifyError, ValueError):
    """Malformed or invalid model, pair law, or function table."""


class ComplexityError(ESVerifyError):
    """An exact enumeration would exceed the configured size guard."""


class ConvergenceError(ESVerifyError):
    """An iterative solver hit its iteration cap."""


class DecompositionError(ESVerifyError):
    """Cycle peeling could not continue although residual mass remains."""
