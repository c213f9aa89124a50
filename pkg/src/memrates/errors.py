"""Exception hierarchy.

Errors fall into two groups that the command line maps to different exit
codes: configuration problems (bad parameters, unsupported combinations)
and numerical-certification failures (a quantity could not be decided or
certified to the requested tolerance).
"""


class MemratesError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(MemratesError, ValueError):
    """Inputs are malformed or mutually inconsistent."""


class CertificationError(MemratesError, ArithmeticError):
    """A numerical answer could not be certified."""


class InvalidParameter(ConfigurationError):
    pass


class NotNormalizable(ConfigurationError):
    pass


class RegimeMismatch(ConfigurationError):
    pass


class MissingHeavyProfile(ConfigurationError):
    pass


class UnsupportedDimension(ConfigurationError):
    pass


class UnsupportedFamily(ConfigurationError):
    pass


class UnsupportedSet(ConfigurationError):
    pass


class OutOfRange(ConfigurationError):
    pass


class ForbiddenOmega(ConfigurationError):
    pass


class ConfigError(ConfigurationError):
    """Raised by the command line when a config key is missing or invalid."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class InsufficientData(ConfigurationError):
    pass


class EmptyRegion(ConfigurationError):
    pass


class NonConvergence(CertificationError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class QuadratureTolNotMet(CertificationError):
    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class Undecidable(CertificationError):
    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class DivergentTerm(CertificationError):
    pass


class EmptyFeasibleSet(CertificationError):
    pass


class EmptyG(CertificationError):
    pass


class RootNotBracketed(CertificationError):
    pass


class NoNegativeG(CertificationError):
    pass


class NoDriftCertificate(CertificationError):
    pass


class NotFoundWithinBudget(CertificationError):
    def __init__(self, message, cap):
        super().__init__(message)
        self.cap = cap
