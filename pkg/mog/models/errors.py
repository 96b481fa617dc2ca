"""Domain errors raised by the mog services.

The CLI maps every MogError to exit code 1.
"""


class MogError(Exception):
    """Base class for all domain errors."""


# matrix kernels
class NonFiniteError(MogError):
    """A matrix contains NaN or Inf entries."""


class EigenFailureError(MogError):
    """The eigenvalue solver did not converge."""


class UnstableError(MogError):
    """The (companion) matrix has an eigenvalue with non-negative real part."""


class NotSymmetricError(MogError):
    """A matrix expected to be symmetric is not."""


class NegativeHorizonError(MogError):
    """A time horizon or sampling step is negative (or zero where h > 0 is required)."""


# model construction
class BadShapeError(MogError):
    """Coefficient or covariance matrices have inconsistent shapes."""


class NotStrictError(MogError):
    """The Lévy covariance is not strictly positive definite."""


class ModelFileError(MogError):
    """A model file could not be read or parsed."""


class GraphFileError(MogError):
    """A graph edge-list file could not be read or parsed."""


# graphs
class WrongOrderError(MogError):
    """An operation restricted to MCAR(1) received p != 1."""


class VertexMismatchError(MogError):
    """Two graphs do not share the same vertex set."""


class OutOfRangeError(MogError):
    """A vertex outside 1..n was referenced."""


class QueryInvalidError(MogError):
    """A separation query has overlapping or empty vertex sets."""


class TooLargeError(MogError):
    """The brute-force oracle was asked to enumerate a graph that is too large."""


# simulation
class NonGaussianDriverError(MogError):
    """The exact simulator only handles Brownian drivers."""


class CholeskyFailureError(MogError):
    """A covariance to be factorised is clearly indefinite."""


class BadDriverError(MogError):
    """A Lévy driver has invalid parameters or the wrong dimension."""


# empirical checks
class ShapeMismatchError(MogError):
    """A sample path does not match the state space it is checked against."""


class DegenerateVarianceError(MogError):
    """A residual series has (numerically) zero variance."""


class RankDeficientError(MogError):
    """The regressor matrix of a least-squares fit is rank deficient."""


class InsufficientSamplesError(MogError):
    """A path is too short for the requested estimate."""


class SingularBlockError(MogError):
    """A spectral density block is numerically singular."""


class SingularResolventError(MogError):
    """iλ is an eigenvalue of the companion matrix."""
