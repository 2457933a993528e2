"""Exception types raised by the solver and the estimate checks."""


class ConfigurationError(ValueError):
    """A power field, kernel, mesh or experiment configuration is invalid."""


class SingularityError(ValueError):
    """The kernel was requested on the diagonal x = y."""


class DivergenceError(ArithmeticError):
    """A far-field integral does not converge for the given exponents."""


class EmptyBallError(ValueError):
    """A ball query contains no cell centers."""
