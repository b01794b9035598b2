"""Exception types shared across the package."""


class TrimodeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TrimodeError):
    """Invalid run configuration; carries the path of the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class StabilityError(TrimodeError):
    """Integration step too large for the fastest coefficient scale."""


class DivergenceError(TrimodeError):
    """State became non-finite during integration."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"state became non-finite at t = {time:.6e} s")


class AdiabaticApplicabilityError(TrimodeError):
    """Adiabatic elimination preconditions not met."""


class FitRejectedError(TrimodeError):
    """Exponential fit converged to a non-decaying solution."""


class FitConvergenceError(TrimodeError):
    """Exponential fit did not converge; carries the residual history."""

    def __init__(self, message: str, residual_history):
        self.residual_history = list(residual_history)
        super().__init__(message)


class FringeRankError(TrimodeError):
    """Phase grid too degenerate to determine the fringe parameters."""
