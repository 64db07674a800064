"""Exception types shared across the package."""


class SplitPumpError(Exception):
    """Base class for all errors raised by splitpump."""


class MalformedInputError(SplitPumpError, ValueError):
    """Input has the wrong shape, dimension or violates a precondition."""


class InconsistencyError(SplitPumpError, ArithmeticError):
    """A numerical identity that should hold by construction failed."""
