"""Exception types shared across the package."""


class ResolutionError(ValueError):
    """Grid too coarse for the requested operation."""


class SupportError(ValueError):
    """Generated potential would leave the unit disk."""


class ResonantNodeError(ValueError):
    """A frequency-lattice node sits too close to a zero of the Green's
    function symbol; shift the lattice offset."""


class DirichletProximityError(RuntimeError):
    """Interior operator is near-singular (close to a Dirichlet eigenvalue).

    Carries the condition diagnostic in ``margin``.
    """

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class NonConvergenceError(RuntimeError):
    """Iterative solve stagnated.  ``history`` holds the residual trace."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class BasisMismatchError(ValueError):
    """Operands discretized in incompatible bases (n_max or energy differ)."""
