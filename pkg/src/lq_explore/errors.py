"""Exception types shared across the package."""


class LQExploreError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(LQExploreError):
    """The control-noise Gram matrix sum_j D_j D_j^T has an eigenvalue <= 0."""


class NegativeWeight(LQExploreError):
    """A cost weight (Q or H) is negative."""


class BadHorizon(LQExploreError):
    """The horizon T is not strictly positive."""


class BadCGamma(LQExploreError):
    """c_gamma is too small: 1/c_gamma must be below the smallest eigenvalue
    of (sum_j D_j D_j^T)^{-1}, i.e. c_gamma must exceed the largest eigenvalue
    of sum_j D_j D_j^T."""


class CholeskyFail(LQExploreError):
    """A covariance matrix that must be positive definite is not."""


class NonFinite(LQExploreError):
    """A simulated state or an update summand overflowed to inf/nan."""


class SingularRegression(LQExploreError):
    """The least-squares design matrix is rank deficient (or there is no data)."""


class DegenerateFit(LQExploreError):
    """The log-log slope fit has no usable points in the window."""


class ConfigError(LQExploreError):
    """A config file or CLI option could not be interpreted."""
