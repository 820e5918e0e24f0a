"""Exception types raised by relinfo."""


class RelInfoError(Exception):
    """Base class for all library errors."""


class ShapeError(RelInfoError, ValueError):
    """Operands have incompatible dimensions."""


class ValidationError(RelInfoError, ValueError):
    """A value violates a documented invariant (negative rate, bad distribution, ...)."""


class InvalidMatrixError(ValidationError):
    """Matrix contains non-finite entries or has the wrong shape."""


class DegeneratePopulationError(ValidationError):
    """Population with zero total cannot be normalized."""


class InfiniteEnergyError(ValidationError):
    """A state has zero steady-state probability, so its energy is infinite."""

    def __init__(self, state, message=None):
        self.state = state
        super().__init__(message or f"state {state!r} has zero probability; energy is infinite")


class NotMarkovNetworkError(ValidationError):
    """Reaction network has a complex that is not a single species."""

    def __init__(self, complex_label):
        self.complex_label = complex_label
        super().__init__(f"complex {complex_label!r} is not a single species")


class ParseError(RelInfoError, ValueError):
    """Malformed model text. Carries 1-based line and column."""

    def __init__(self, message, line, column=1):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"line {line}, column {column}: {message}")


class IntegrationError(RelInfoError, RuntimeError):
    pass


class IntegrationBudgetError(IntegrationError):
    """Step budget exhausted; ``trajectory`` holds the partial result."""

    def __init__(self, trajectory, max_steps):
        self.trajectory = trajectory
        self.max_steps = max_steps
        super().__init__(
            f"exceeded max_steps={max_steps} at t={trajectory.times[-1]:.6g}"
        )


class NumericalBlowupError(IntegrationError):
    """Vector field returned a non-finite derivative."""

    def __init__(self, time):
        self.time = time
        super().__init__(f"non-finite derivative at t={time:.6g}")


class NoEquilibriumError(RelInfoError, RuntimeError):
    """Newton polishing failed; ``last`` holds the final iterate."""

    def __init__(self, last, residual):
        self.last = last
        self.residual = residual
        super().__init__(f"no equilibrium found (residual {residual:.3g})")
