from errors.base_errors import RenyiError


class NumericalError(RenyiError):
    """A computation produced a non-finite value; details["node"] holds the abscissa when known."""

    exit_code = 2


class DecompositionError(NumericalError):
    """
    A Cholesky factorisation failed.

    Attributes:
        pivot (int): 1-based index of the leading minor that is not positive definite.
    """

    def __init__(self, error: str, source: str = None, pivot: int = None):
        super().__init__(error, source, {"pivot": pivot})
        self.pivot = pivot


class DegenerateFitError(NumericalError):
    """The scale estimate collapsed (σ̂ → 0) or the data are fitted exactly."""


class DegenerateDirectionError(NumericalError):
    """A power computation was asked along a direction with no detectable effect (ℓ = 0 or σ_W = 0)."""
