"""
Exception classes for the kerrvac package
"""
class KerrvacError(Exception):
    """
    Base exception for most kerrvac issues
    """
    def __init__(self, message, context_dict=None):
        super().__init__(message)
        self.context_dict = context_dict or {}


class ProfileError(KerrvacError):
    """
    Raised when a pulse profile, a material or a trajectory
    violates its invariants
    """
    pass


class DomainError(ProfileError):
    """
    Raised when an input lies outside the domain of an operation,
    like a negative intensity or a negative acceleration
    """
    pass


class WrongVariantError(ProfileError):
    """
    Raised when an operation receives a profile variant it does not handle
    """
    pass


class UnsupportedTrajectoryError(ProfileError):
    """
    Raised when a trajectory kind cannot be used by an estimator
    """
    pass


class NotClosedFormError(KerrvacError):
    """
    Raised when a profile has no closed-form Fourier transform.
    Callers fall back to the grid transform.
    """
    pass


class ResolutionError(KerrvacError):
    """
    Raised when a sampling grid is too short or too coarse for a profile
    """
    pass


class ExtentError(KerrvacError):
    """
    Raised when a spectrum is evaluated outside the extent of its grid
    """
    pass


class IntegrationAccuracyError(KerrvacError):
    """
    Raised when an integrator cannot reach the requested tolerance
    within its evaluation budget
    """
    pass


class UndefinedMeanError(KerrvacError):
    """
    Raised when a mean is requested over a vanishing total weight
    """
    pass


class ZeroSampleError(KerrvacError):
    """
    Raised when a Monte-Carlo estimate has no usable samples
    """
    pass


class SweepError(KerrvacError):
    """
    Raised when a parameter sweep is malformed or one of its points fails
    """
    pass


class FitError(KerrvacError):
    """
    Raised when a power-law fit cannot be made from a table
    """
    pass


class ExponentLookupError(KerrvacError):
    """
    Raised when no predicted exponent exists for a
    (regime, observable, parameter) triple
    """
    pass


class NoValidBoostError(KerrvacError):
    """
    Raised when a boost reaches or exceeds the medium speed of light
    """
    pass


class NoHorizonError(KerrvacError):
    """
    Raised when the pulse speed never matches the local speed of light
    """
    pass


class DegenerateHorizonError(KerrvacError):
    """
    Raised when the speed mismatch has a vanishing gradient at a horizon
    """
    pass


class MissingAreaError(KerrvacError):
    """
    Raised when a three dimensional Hawking estimate has no horizon area
    """
    pass


class ConfigSyntaxError(KerrvacError):
    """
    Raised when a configuration text cannot be parsed.
    The context_dict carries the line and column.
    """
    pass


class ConfigSchemaError(KerrvacError):
    """
    Raised when a configuration has unknown, missing or mistyped keys.
    The context_dict carries the key path.
    """
    pass


class ConfigValidationError(KerrvacError):
    """
    Raised when a syntactically valid configuration is inconsistent
    """
    pass


class EarlyExitError(KerrvacError):
    """
    Raised when an early exit is requested by the end user of
    the CLI tool
    """
