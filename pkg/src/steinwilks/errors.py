"""Exception hierarchy.

``ConfigError`` maps to CLI exit code 2, every ``NumericalError`` subclass to
exit code 3.
"""

from __future__ import annotations


class SteinWilksError(Exception):
    """Base class for all library errors."""


class ConfigError(SteinWilksError):
    """Invalid run configuration or command-line input."""


class NumericalError(SteinWilksError):
    """Base class for numerical / statistical failures."""


class NormViolation(NumericalError):
    """A declared test-function sup norm is exceeded on the validation grid."""

    def __init__(self, norm_name: str, location: float, sampled_value: float):
        self.norm_name = norm_name
        self.location = location
        self.sampled_value = sampled_value
        super().__init__(
            f"declared {norm_name} violated: |value|={sampled_value:.6g} at x={location:.6g}"
        )


class ContractViolation(NumericalError):
    """A model fails an empirical regularity spot-check."""

    def __init__(self, condition: str, coordinate: tuple | int, zscore: float):
        self.condition = condition
        self.coordinate = coordinate
        self.zscore = zscore
        super().__init__(
            f"contract check '{condition}' failed at coordinate {coordinate} (|z|={zscore:.2f})"
        )


class NotSymmetric(NumericalError):
    """Matrix expected to be symmetric is not."""


class NotPositiveDefinite(NumericalError):
    """Matrix expected to be positive definite is not."""


class IllConditioned(NumericalError):
    """Condition-number estimate exceeds the inversion guard."""


class DimensionMismatch(NumericalError):
    """Vector/matrix dimensions do not match."""


class MissingMoment(NumericalError):
    """A required moment entry is absent or non-finite."""

    def __init__(self, field: str, index=None):
        self.field = field
        self.index = index
        where = f"{field}[{index}]" if index is not None else field
        super().__init__(f"missing or non-finite moment entry {where}")


class NonpositiveEpsilon(NumericalError):
    """The localisation radius must be strictly positive."""


class UnsupportedOrder(NumericalError):
    """Moment order outside the supported range."""


class Separation(NumericalError):
    """Logistic MLE does not exist (separable data)."""


class SingularHessian(NumericalError):
    """Newton step failed because the Hessian is singular."""


class MaxIterations(NumericalError):
    """Iterative solver exhausted its iteration budget."""


class OracleUnavailable(NumericalError):
    """No moment oracle registered for the requested model/restriction."""


class QuadratureNonconvergence(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class ExcessiveFitFailures(NumericalError):
    """More than 0.1% of Monte Carlo replicates failed to fit."""


class RejectionShortfall(NumericalError):
    """Rejection sampling accepted fewer replicates than required."""
