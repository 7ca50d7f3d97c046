"""Exception hierarchy shared by all fdelab modules."""


class FdeLabError(Exception):
    """Base class for all errors raised by fdelab."""


class DomainError(FdeLabError):
    """(n, m) outside the subcritical range n >= 3, 0 < m < (n-2)/n."""


class SubcriticalBetaError(FdeLabError):
    """beta below the existence threshold beta_e(m)."""


class UnsupportedRegime(FdeLabError):
    """Operation requires a (C1)/(C2)/(C3) classification."""


class WrongBetaError(FdeLabError):
    """Closed-form Barenblatt profile requested away from beta = beta_1."""


class IntegrationFailure(FdeLabError):
    """Adaptive ODE integration failed (step underflow or solver abort)."""


class PositivityLoss(FdeLabError):
    """Profile solver produced f <= 0; the true solution is positive."""


class OutOfRange(FdeLabError):
    """Evaluation requested outside the stored grid."""


class InsufficientRange(FdeLabError):
    """Profile or trace not resolved far enough for the requested analysis."""


class SignMismatch(FdeLabError):
    """Sign of w on the fit window contradicts the regime."""


class SlopeMismatch(FdeLabError):
    """Fitted tail exponent deviates too far from the characteristic root."""


class DivergentIntegral(FdeLabError):
    """Truncated integral has not stabilized on the resolved range."""


class BoundViolation(FdeLabError):
    """Constructed initial data leaves the required profile envelope."""


class NegativeValue(FdeLabError):
    """Time step produced a non-positive node after all retries."""


class SingularSystem(FdeLabError):
    """Banded linear system of the implicit step is singular."""


class GridMismatch(FdeLabError):
    """Operands live on different grids."""


class NoFeasibleLambda(FdeLabError):
    """No profile in the scanned family dominates the state."""


class RegimeError(FdeLabError):
    """Diagnostic invoked outside the regime it is defined for."""


class InsufficientSamples(FdeLabError):
    """Too few time slices for a finite-difference check."""


class SchemaError(FdeLabError):
    """Run configuration failed validation."""
