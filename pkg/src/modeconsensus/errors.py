"""Exception hierarchy shared by every layer of the package."""


class ModeConsensusError(Exception):
    """Base class for all package errors."""


class DegenerateRingError(ModeConsensusError, ValueError):
    pass


class InadmissibleChange(ModeConsensusError):
    """A scenario event that violates the plug-and-play rules."""

    def __init__(self, reason, event=None):
        super().__init__(reason)
        self.reason = reason
        self.event = event


class UnknownAttributeError(ModeConsensusError, KeyError):
    pass


class GainViolation(ModeConsensusError):
    pass


class LocalInitError(ModeConsensusError):
    """A node became active without a local initial state."""


class NumericalRefusal(ModeConsensusError):
    """The requested step size cannot realize the dynamics faithfully."""

    def __init__(self, message, required_dt=None):
        super().__init__(message)
        self.required_dt = required_dt


class LockFailure(ModeConsensusError):
    pass


class ConfigError(ModeConsensusError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class AlgorithmInconsistency(ModeConsensusError):
    """An algorithm reached a state that correct protocol outputs cannot produce."""
