"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Unknown keys, unparsable values or parameter invariant violations."""


class AeroDomainError(ValueError):
    """Operating point outside the admissible aerodynamic domain."""


class EquilibriumError(RuntimeError):
    """No admissible equilibrium for the requested mean wind speed."""


class SynthesisError(RuntimeError):
    """Controller/observer synthesis failed (rank or Riccati convergence)."""


class EndOfDataError(RuntimeError):
    """A preview lookup ran past the end of the wind record."""
