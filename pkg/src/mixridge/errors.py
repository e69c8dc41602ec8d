"""Exception types shared across the toolkit."""


class MixridgeError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpectrum(MixridgeError):
    """Eigenvalue sequence is empty, non-positive somewhere, or increasing."""


class InvalidParams(MixridgeError):
    """Arguments violate a documented precondition."""


class NoKStar(MixridgeError):
    """No split index satisfies the tail-dominance inequality."""


class SingularRegularization(MixridgeError):
    """Regularization is at or below the smallest Gram eigenvalue; the
    regularized Gram matrix is singular or outside the valid domain."""


class DegenerateS(MixridgeError):
    """The decomposition denominator S is non-positive within tolerance."""


class ZeroSolution(MixridgeError):
    """A weight vector required to be nonzero vanished."""


class TooFewTrials(MixridgeError):
    """Trial budget is too small for the requested quantile level."""


class SchemaMismatch(MixridgeError):
    """A CSV file does not match the documented column contract."""


class ConfigError(MixridgeError):
    """Run configuration is malformed (unknown keys, bad types, bad values)."""
