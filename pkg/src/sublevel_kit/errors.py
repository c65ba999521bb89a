"""Exception types raised across the toolkit."""


class SublevelKitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SublevelKitError):
    """A point lies outside a field's domain box."""


class LevelRangeError(SublevelKitError):
    """A level t lies outside the field's declared regular range."""


class NonDifferentiablePointError(SublevelKitError):
    """Gradient requested on a smoothness interface of a piecewise field."""


class FieldIdError(SublevelKitError):
    """Unknown or malformed corpus field identifier."""


class ParameterError(SublevelKitError):
    """Invalid parameter value (nonpositive weight, bad resolution, ...)."""


class IntegrandError(SublevelKitError):
    """Integrand evaluated to a non-finite value on the fiber."""


class TooThinShellError(SublevelKitError):
    """Shell acceptance rate too low; widen delta or raise the sample count."""


class CriticalProximityError(SublevelKitError):
    """Fiber carries points with near-vanishing gradient; refusing 1/|grad f|."""


class SupportViolationError(SublevelKitError):
    """Density is nonzero outside the declared level band."""


class SandwichViolationError(SublevelKitError):
    """No fiber samples bracket the target ratio A(t)/J(t)."""


class MeanValueSearchError(SublevelKitError):
    """Mean-value point search failed to reach the residual tolerance."""


class DecompositionMismatchError(SublevelKitError):
    """Detected fiber component count differs from the declared count."""


class DataError(SublevelKitError):
    """Measured data unusable for a fit (e.g. nonpositive volume derivative)."""
