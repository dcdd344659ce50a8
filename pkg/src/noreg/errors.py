"""Exception hierarchy.

Everything raised on purpose derives from NoregError so callers can
distinguish domain failures (exit code 1) from I/O and parse problems
(exit code 2), which derive from ScenarioFormatError.
"""


class NoregError(Exception):
    """Base class for all domain errors."""


class DimensionMismatch(NoregError):
    """Operands have incompatible shapes."""


class InconsistentSystem(NoregError):
    """An exact linear solve was requested for an inconsistent system."""


class DegeneratePencil(NoregError):
    """The system pencil is rank deficient for every frequency."""


class NonzeroLeaderRow(NoregError):
    """The leader node receives edges, so the Laplacian cannot be partitioned."""


class RegulatorInfeasible(NoregError):
    """The steady-state matrix equations have no solution (assumption A.3 fails)."""


class SingularEigenvectorMatrix(NoregError):
    """The assembled eigenvector matrix is numerically singular."""


class SearchFailed(NoregError):
    """The eigenstructure search exhausted its candidate budget.

    Carries the best candidate seen so the caller can inspect which
    output components kept failing the sign-constancy test.
    """

    def __init__(self, message, best=None, failing_outputs=()):
        super().__init__(message)
        self.best = best
        self.failing_outputs = tuple(failing_outputs)


class PlacementFailed(NoregError):
    """No observer gain could meet the spectral bound (detectability defect)."""


class GammaInfeasible(NoregError):
    """The coupling-gain bound cannot be met: the follower block has a
    non-positive eigenvalue real part."""


class PreconditionViolated(NoregError):
    """An operation's documented precondition does not hold."""


class ScenarioFormatError(NoregError):
    """A scenario or gains file is malformed."""
