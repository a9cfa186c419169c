"""Exception types shared across the package."""


class SpaceMismatchError(ValueError):
    """Vector length or space tag does not match the operation's space."""


class DegenerateInputError(ValueError):
    """Input is outside the operation's domain (zero norm, nonpositive value, ...)."""


class ConfigError(ValueError):
    """Invalid or unknown configuration key/value. Message names the key."""


class NumericsError(ArithmeticError):
    """A computation produced a non-finite value."""
