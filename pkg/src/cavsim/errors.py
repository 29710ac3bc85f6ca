"""Exception types raised across the package."""


class CavsimError(Exception):
    """Base class for all library errors."""


class ParameterError(CavsimError, ValueError):
    """Physical parameters violate a basic invariant (negative rate, no cavity loss...)."""


class DegenerateRoot(CavsimError, ArithmeticError):
    """The selected effective rate coincides with the cavity rate, so ``x`` diverges."""


class SingularX(CavsimError, ArithmeticError):
    """``1 - x**2`` vanishes and the effective Rabi frequency is undefined."""


class ZeroGammaA(CavsimError, ValueError):
    """Cooperativity requested for an atom without free-space decay."""


class DimensionOverflow(CavsimError, ValueError):
    """Requested Fock truncation exceeds the configured dimension cap."""


class SingularLiouvillian(CavsimError, ArithmeticError):
    """The generator does not have a unique stationary state."""


class StepFailure(CavsimError, RuntimeError):
    """The adaptive integrator could not make progress."""


class AliasWarning(UserWarning):
    """Correlation record too short for a faithful Fourier transform."""


class ZeroFlux(CavsimError, ArithmeticError):
    """Photon flux through the requested port vanishes."""


class NoConvergence(CavsimError, RuntimeError):
    """Fock truncation did not converge below the cap."""


class DegenerateEigenvalues(CavsimError, ArithmeticError):
    """The two driven Bloch eigenvalues coincide; closed forms with 1/(l+ - l-) are singular."""


class NotResonant(CavsimError, ValueError):
    """Closed forms requested away from the effective atomic resonance."""


class ParseError(CavsimError, ValueError):
    """Malformed configuration text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)


class ValidationError(CavsimError, ValueError):
    """Configuration parsed but violates a scenario invariant."""


class InvalidState(CavsimError, ArithmeticError):
    """A reconstructed density matrix is non-positive beyond round-off."""
