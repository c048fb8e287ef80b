"""Exception types shared across the package."""


class InfeasibleBracketError(Exception):
    """The threshold bracket does not exist for the given parameters
    (power ceiling at or below the inversion target scaled by lambda3)."""


class NumericalInstabilityError(ArithmeticError):
    """A closed-form probability fell outside its guard band, indicating a
    branch-selection or cancellation bug rather than floating-point noise."""


class QuadratureError(RuntimeError):
    """An adaptive quadrature failed to reach the requested tolerance."""
