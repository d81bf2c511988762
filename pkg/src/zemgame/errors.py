"""Exception types shared across the solver stack."""

from __future__ import annotations


class ZemGameError(Exception):
    """Base class for all library errors."""


class SolvabilityError(ZemGameError):
    """The evader effort weight does not exceed the squared-kernel integral.

    In that regime the reduced game has a conjugate point and no saddle
    point exists on any branch, so every solver entry point refuses to run.
    """

    def __init__(self, beta: float, threshold: float):
        self.beta = beta
        self.threshold = threshold
        super().__init__(
            "solvability condition violated: beta=%g does not exceed the "
            "integral of the squared evader kernel (%g)" % (beta, threshold)
        )


class NearSingularError(ZemGameError):
    """A 2x2 system matrix has a determinant below the singularity threshold."""


class NotInConstrainedRegion(ZemGameError):
    """An equality-constrained solve was requested for an interior position."""


class ProbeFailure(ZemGameError):
    """A saddle-probe perturbation broke the saddle inequality."""

    def __init__(self, message: str, trial: int | None = None, coefficients=None):
        super().__init__(message)
        self.trial = trial
        self.coefficients = coefficients


class AssertionFailure(ZemGameError):
    """An internal cross-check failed; the inputs are inconsistent or there is a bug."""


class ScenarioFormatError(ZemGameError):
    """A scenario document is malformed; the message names the offending key."""
