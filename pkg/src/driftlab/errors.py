"""Exception types shared across the package."""


class DriftlabError(Exception):
    """Base class for all package errors."""


class InvalidKernelError(DriftlabError):
    """Transition kernel entries out of range or not summing to 1."""


class InvalidSpecError(DriftlabError):
    """Environment spec violates a family invariant."""


class WindowExceededError(DriftlabError):
    """A walk or query left the window the field is certified on.

    Carries the offending site so callers can enlarge and retry.
    """

    def __init__(self, site, window=None):
        self.site = site
        self.window = window
        super().__init__(f"site {site} outside certified window {window}")


class InvalidGeometryError(DriftlabError):
    """Box/grid arguments violate a geometric precondition."""


class InvalidParameterError(DriftlabError):
    """Numeric parameter outside its documented domain."""


class InvalidStateError(DriftlabError):
    """Operation applied to an object in the wrong state (e.g. censored run)."""


class InvalidConfigurationError(DriftlabError):
    """Barrier-trial preconditions violated (distinct from a VIOLATION verdict)."""


class EstimationFailedError(DriftlabError):
    """Estimator could not produce a value (e.g. every sample censored)."""


class CostGuardError(DriftlabError):
    """Refusing a simulation that is astronomically large by construction."""


class ConfigError(DriftlabError):
    """Experiment configuration file/dict is invalid. CLI exit code 2."""
