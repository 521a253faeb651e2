"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: InvalidInput -> 2, NumericFailure -> 3,
verification failures are reported in results (exit 1), everything else is a bug.
"""


class RandschrodError(Exception):
    """Base class for all package errors."""


class InvalidInput(RandschrodError):
    """A precondition on user-supplied data was violated."""


class ParametersInadmissible(InvalidInput):
    """Constructor parameters fail an admissibility check (covering, step size, ...)."""


class NumericFailure(RandschrodError):
    """A numeric routine failed (overflow, solver non-convergence)."""


class PoleError(NumericFailure):
    """A Moebius map was evaluated at its pole; the caller decides how to
    interpret the projective point at infinity."""


class IllConditionedError(NumericFailure):
    """A resolvent was requested too close to an eigenvalue."""

    def __init__(self, msg, distance=None):
        super().__init__(msg)
        self.distance = distance


class SpectralRegimeError(NumericFailure):
    """An operation that needs uniform hyperbolicity was invoked at an energy
    too close to (or inside) the spectrum for the chosen discretization."""
