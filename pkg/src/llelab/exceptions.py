"""Exception types shared across the package."""


class LlelabError(Exception):
    """Base class for all package errors."""


class InvalidFieldError(LlelabError):
    """A field contains non-finite entries or has the wrong length."""


class ParameterError(LlelabError):
    """Model or operation parameters outside their admissible range."""


class NoConvergenceError(LlelabError):
    """An iterative solve failed to reach tolerance."""

    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class SingularJacobianError(LlelabError):
    """Newton Jacobian (after gauge fixing) is numerically singular."""


class FoldError(LlelabError):
    """Continuation hit a fold; carries the partial branch."""

    def __init__(self, message, partial=None, k_fold=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
        self.k_fold = k_fold


class StabilityError(LlelabError):
    """Operation requires a spectrally stable wave."""


class FitQualityError(LlelabError):
    """A least-squares fit did not meet its residual requirement."""


class BlowUpError(LlelabError):
    """Time integration produced a non-finite state."""

    def __init__(self, message, time=None, max_modulus=None, partial=None):
        super().__init__(message)
        self.time = time
        self.max_modulus = max_modulus
        self.partial = partial


class NonInvertiblePhaseError(LlelabError):
    """A phase gamma with ||gamma_x||_inf >= 1 cannot be inverted."""


class SteepPhaseError(LlelabError):
    """Extracted phase violates ||gamma_x||_inf < 1."""


class PhaseUndefinedError(LlelabError):
    """State too far from the wave orbit for phase extraction."""


class FitError(LlelabError):
    """Decay-rate fit impossible (short window or non-positive data)."""


class ConfigurationError(LlelabError):
    """Invalid or inconsistent experiment configuration."""


class MissingArtifactError(LlelabError):
    """A report was requested from an incomplete artifact directory."""


class ExtrapolationError(LlelabError):
    """Requested wavenumber outside the continued family's range."""

    def __init__(self, message, k_min=None, k_max=None):
        super().__init__(message)
        self.k_min = k_min
        self.k_max = k_max
