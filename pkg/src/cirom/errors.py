"""Exception taxonomy for the library.

Every failure mode that callers are expected to handle gets its own class so
that CLI exit codes and tests can discriminate without string matching.
"""


class CiromError(Exception):
    """Base class for all library errors."""


class ParameterShapeError(CiromError):
    """Parameter vector has the wrong length or non-finite entries."""


class PoleProximityError(CiromError):
    """Requested transform point sits (numerically) on a source pole."""


class CapabilityError(CiromError):
    """An optional capability (e.g. coefficient gradients) is missing."""


class TruncationFailureError(CiromError):
    """No admissible truncation parameter satisfies the tail condition."""


class NodeCountFailureError(CiromError):
    """Node doubling hit its cap without reaching the requested accuracy."""

    def __init__(self, message, last_discrepancy=None):
        super().__init__(message)
        self.last_discrepancy = last_discrepancy


class SingularShiftError(CiromError):
    """Direct factorization of a shifted operator failed."""


class SingularStepError(CiromError):
    """Factorization of a time-stepping matrix failed."""


class WindowViolationError(CiromError):
    """Requested evaluation time lies outside the validated window."""


class SymmetryViolationError(CiromError):
    """Imaginary residue of a nominally real solution exceeds tolerance."""


class DegenerateSnapshotError(CiromError):
    """Snapshot matrix carries no information (all zero)."""


class ReducedSingularityError(CiromError):
    """A reduced shifted system is singular; basis or contour is invalid."""


class GreedyStallError(CiromError):
    """Greedy iteration cap reached before meeting the tolerance."""

    def __init__(self, message, log=None, basis=None):
        super().__init__(message)
        self.log = log
        self.basis = basis


class InvalidContextError(CiromError):
    """Estimator context is unusable (e.g. non-positive lower bounds)."""


class MultiplicityError(CiromError):
    """Smallest singular value is not (numerically) simple."""


class ProfileFailureError(CiromError):
    """No acceptable integration profile found within the round budget."""

    def __init__(self, message, worst_mu=None, err_bound=None):
        super().__init__(message)
        self.worst_mu = worst_mu
        self.err_bound = err_bound


class ConfigError(CiromError):
    """Experiment configuration failed validation."""
