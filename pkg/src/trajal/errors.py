"""Exception hierarchy shared across the package."""


class TrajalError(Exception):
    """Base class for all package errors; carries a machine-readable code."""

    code = "error"

    def record(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InfeasibleSpecError(TrajalError):
    code = "infeasible-spec"


class ChannelMismatchError(TrajalError):
    code = "channel-mismatch"


class CalibrationError(TrajalError):
    code = "calibration-failed"


class DivergenceError(TrajalError):
    code = "divergence"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class SessionError(TrajalError):
    code = "session-error"


class ArtifactError(TrajalError):
    """A referenced on-disk artifact is missing or malformed."""

    code = "missing-artifact"
