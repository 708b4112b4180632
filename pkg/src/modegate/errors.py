"""Exception hierarchy shared by the compute modules and the CLI."""


class ModeGateError(Exception):
    """Base class for all package errors."""


class ConfigError(ModeGateError, ValueError):
    """Invalid physical or run configuration."""


class SolverError(ModeGateError):
    """An iterative solver failed to converge.

    ``residual`` carries the last residual norm reached.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateGeometryError(ModeGateError):
    """Two ions share an equilibrium position."""


class InstabilityError(ModeGateError):
    """A normal mode has a non-positive curvature eigenvalue."""

    def __init__(self, message, mode_index):
        super().__init__(message)
        self.mode_index = mode_index


class InfeasibleError(ModeGateError):
    """No solution exists within the requested search region."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class PulseDomainError(ModeGateError, ValueError):
    """Pulse evaluated outside [0, tau]."""


class SelectionError(ModeGateError):
    """No harmonic survives the requested filter."""


class DegenerateCouplingError(ModeGateError):
    """The ion pair does not couple at the requested harmonic."""


class PoleError(ModeGateError, ZeroDivisionError):
    """Closed form hit an exact resonance; use the factored evaluation."""


class BudgetInfeasibleError(ModeGateError):
    """Error budget is below the irreducible resonant residual."""

    def __init__(self, message, alpha0):
        super().__init__(message)
        self.alpha0 = alpha0


class AccuracyError(ModeGateError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
