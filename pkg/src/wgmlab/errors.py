"""Exception types shared across the package."""


class WgmlabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(WgmlabError, ValueError):
    """An argument is outside the physical domain of an operation."""


class ConfigError(WgmlabError, ValueError):
    """An experiment configuration file is malformed or inconsistent."""


class EngineError(WgmlabError, RuntimeError):
    """The coupled-mode engine was asked for something unphysical
    (unstable drive, defective generator, bad integration step)."""


class FitError(WgmlabError, RuntimeError):
    """A least-squares inversion failed to converge.

    Carries the last iterate and its residual so callers can log or
    retry with a better seed.
    """

    def __init__(self, message, last_params=None, residual_rms=None):
        super().__init__(message)
        self.last_params = last_params
        self.residual_rms = residual_rms
