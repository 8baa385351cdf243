"""Exception types raised across the package."""


class SRLMError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SRLMError, ValueError):
    pass


class InvalidValueError(SRLMError, ValueError):
    """A non-finite value turned up where a finite one was required."""


class DimensionError(SRLMError, ValueError):
    pass


class UnsupportedError(SRLMError):
    """Requested configuration is outside what the implementation handles."""


class SingularFamilyError(SRLMError):
    """The Gram matrix of a field family is singular, indefinite or badly conditioned."""


class IntegrationError(SRLMError):
    """Time integration produced non-finite values.

    ``t`` is the time at which the blow-up was detected.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigError(SRLMError, ValueError):
    pass
