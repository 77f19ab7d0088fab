"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A physical parameter or argument violates its documented domain."""


class ConfigError(InvalidInputError):
    """A config file or override is malformed or references unknown keys."""


class SchemaVersionError(ConfigError):
    """A persisted file declares an unsupported schema version."""


class SingularParametersError(InvalidInputError):
    """A derived quantity (e.g. the cavity-broadened rate alpha) is zero."""


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed; names the time of failure."""

    def __init__(self, t: float, h: float):
        self.t = t
        self.h = h
        super().__init__(f"step size underflow at t={t:.6e} s (h={h:.3e} s)")


class DivergenceError(RuntimeError):
    """State became non-finite; carries a growth-exponent estimate."""

    def __init__(self, t: float, growth_exponent: float):
        self.t = t
        self.growth_exponent = growth_exponent
        super().__init__(
            f"state diverged at t={t:.6e} s "
            f"(estimated growth exponent {growth_exponent:.3e} 1/s)"
        )
