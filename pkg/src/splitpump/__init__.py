"""Finite-step preparation of pure qubit states with splitting subspaces and coherent feedback."""

from .errors import InconsistencyError, MalformedInputError, SplitPumpError

__all__ = ["InconsistencyError", "MalformedInputError", "SplitPumpError"]
