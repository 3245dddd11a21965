"""Exception types shared across the package."""


class ProdGraphError(Exception):
    """Base class for all package errors."""


class GraphError(ProdGraphError, ValueError):
    """Invalid or degenerate graph input."""


class DimensionError(ProdGraphError, ValueError):
    """Array, tensor, or factor dimensions do not agree."""


class SolverDivergence(ProdGraphError, RuntimeError):
    """An iterative solver produced non-finite values."""
