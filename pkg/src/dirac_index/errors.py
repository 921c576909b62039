"""Exception types shared by the numerical modules."""


class DiracIndexError(Exception):
    """Base class for all package errors."""


class InvariantViolation(DiracIndexError):
    """A numerical invariant (hermiticity, unitarity, realness, ...) failed."""


class SpectralGapError(InvariantViolation):
    """The potential is not invertible with the requested spectral gap."""

    def __init__(self, x, eigenvalue, gap_tol):
        self.x = x
        self.eigenvalue = eigenvalue
        self.gap_tol = gap_tol
        super().__init__(
            f"spectral gap violated at x={list(map(float, x))}: "
            f"|eigenvalue|={abs(eigenvalue):.3e} < gap_tol={gap_tol:.1e}"
        )


class NonConvergenceError(DiracIndexError):
    """A limit or iteration failed to converge and the caller asked for it to be fatal."""


class EvolutionError(DiracIndexError):
    """Step-size control of the propagator broke down."""


class ConfigError(DiracIndexError):
    """Invalid configuration, field name or schema."""


class ConditioningError(DiracIndexError):
    """A spectral parameter lies too close to a branch cut or the spectrum."""
