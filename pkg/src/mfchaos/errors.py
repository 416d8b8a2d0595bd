"""Exception hierarchy shared by every mfchaos module."""


class MfchaosError(Exception):
    """Base class for all errors raised by mfchaos."""


class SizeError(MfchaosError, ValueError):
    """Two inputs disagree on the number of points or particles."""


class DimError(MfchaosError, ValueError):
    """Two inputs disagree on the ambient dimension."""


class ScaleError(MfchaosError, ValueError):
    """An instance is too large for the requested exact routine."""


class ParamError(MfchaosError, ValueError):
    """A numeric parameter is outside its admissible domain."""


class MatrixError(MfchaosError, ValueError):
    """A matrix is not symmetric positive semidefinite within tolerance."""


class EmptyMeasureError(MfchaosError, ValueError):
    """A measure with no atoms was supplied where mass is required."""


class ModelKindError(MfchaosError, TypeError):
    """An operation requires a different kind of mean-field model."""


class DivergenceError(MfchaosError, FloatingPointError):
    """Non-finite values appeared while advancing a simulation.

    Attributes
    ----------
    step : int
        Global index of the step that produced the non-finite state.
    time : float
        Time at the start of that step.
    """

    def __init__(self, step, time, detail=""):
        self.step = int(step)
        self.time = float(time)
        msg = f"non-finite state at step {self.step} (t={self.time:.6g})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CurveCoverageError(MfchaosError, ValueError):
    """A measure curve does not cover the requested time interval."""


class NonContractionError(MfchaosError, RuntimeError):
    """Picard iteration failed to reach its tolerance.

    Attributes
    ----------
    residuals : list of float
        The residual sequence observed before giving up.
    """

    def __init__(self, residuals, window=None):
        self.residuals = [float(r) for r in residuals]
        self.window = window
        where = "" if window is None else f" in window {window}"
        tail = ", ".join(f"{r:.3g}" for r in self.residuals[-5:])
        super().__init__(
            f"Picard iteration did not converge{where} after "
            f"{len(self.residuals)} iterations (last residuals: {tail})")


class ConfigError(MfchaosError, ValueError):
    """Base class for configuration errors; ``field`` names the culprit."""

    def __init__(self, field, detail=""):
        self.field = field
        msg = f"{field!r}" + (f": {detail}" if detail else "")
        super().__init__(msg)


class MissingField(ConfigError):
    """A required configuration field is absent."""


class RangeError(ConfigError):
    """A configuration value is outside its admissible range."""


class UnknownKey(ConfigError):
    """A configuration file contains a key the schema does not know."""

