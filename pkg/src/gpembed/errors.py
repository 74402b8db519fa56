"""Exception hierarchy.

Validation problems derive from ``ValueError`` so callers that only care
about bad input can catch that; numerical failures derive from
``ArithmeticError``.
"""


class GPEmbedError(Exception):
    """Base class for all errors raised by gpembed."""


class InputError(GPEmbedError, ValueError):
    """Malformed data, e.g. non-finite coordinates or ragged point lists."""


class ParameterError(GPEmbedError, ValueError):
    """A scalar or shape parameter is out of its allowed range."""


class SpecError(ParameterError):
    """Invalid manifold or experiment settings."""


class NumericalError(GPEmbedError, ArithmeticError):
    """Base class for failures of a numerical routine."""


class DegenerateError(NumericalError):
    """A normalizer vanished (zero row sum, zero scaling component, ...)."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap before reaching tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DecompositionError(NumericalError):
    """Eigenpairs failed the residual check, even after dense fallback."""


class SpectralError(NumericalError):
    """Eigenvalues are inconsistent with a PSD kernel."""


class TrialError(GPEmbedError):
    """Wraps a failure inside one experiment trial."""

    def __init__(self, trial, cause):
        super().__init__(f"trial {trial}: {type(cause).__name__}: {cause}")
        self.trial = trial
        self.cause = cause
