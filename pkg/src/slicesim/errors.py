"""Exception hierarchy shared by every slicesim module."""

from __future__ import annotations


class SliceSimError(Exception):
    """Base class for all slicesim errors."""


class OutOfRange(SliceSimError, ValueError):
    pass


class ValidationError(SliceSimError, ValueError):
    """Invalid input; ``path`` points at the offending field (JSON-path style)."""

    def __init__(self, message: str, path: str | None = None):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(SliceSimError):
    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


# --- URSP ---------------------------------------------------------------

class ValidationFailed(ValidationError):
    pass


class NoMatchingRule(SliceSimError):
    def __init__(self, ue_id, flow_id):
        self.ue_id = ue_id
        self.flow_id = flow_id
        super().__init__(f"no URSP rule of UE {ue_id!r} matches flow {flow_id!r}")


class AllRsdsFailed(SliceSimError):
    def __init__(self, flow_id, attempts):
        self.flow_id = flow_id
        #: list of (RouteSelectionDescriptor, exception-or-None)
        self.attempts = list(attempts)
        causes = "; ".join(
            f"{rsd.snssai}/{rsd.dnn}: {err}" for rsd, err in self.attempts
        )
        super().__init__(f"every RSD failed for flow {flow_id!r} ({causes})")


# --- control plane ------------------------------------------------------

class ControlPlaneError(SliceSimError):
    pass


class AlreadyRegistered(ControlPlaneError):
    pass


class NotRegistered(ControlPlaneError):
    pass


class RegistrationRejected(ControlPlaneError):
    NOT_SUBSCRIBED = "NotSubscribed"
    NOT_SUPPORTED_AT_GNB = "NotSupportedAtGnb"

    def __init__(self, ue_id, cause: str):
        self.ue_id = ue_id
        self.cause = cause
        super().__init__(f"registration of UE {ue_id!r} rejected: {cause}")


class EstablishmentError(ControlPlaneError):
    """PDU session establishment refused. URSP fallback moves to the next RSD."""


class SliceNotAllowed(EstablishmentError):
    pass


class UnknownDnn(EstablishmentError):
    pass


class SessionLimitExceeded(EstablishmentError):
    pass


class AlreadyReleased(ControlPlaneError):
    pass


# --- scheduler / engine / cost -----------------------------------------

class UnknownSlice(SliceSimError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown slice"


class EmptyWindow(SliceSimError, ValueError):
    pass


class Degenerate(SliceSimError, ValueError):
    pass


class IndexOutOfRange(SliceSimError, IndexError):
    pass


class AdmissionError(SliceSimError):
    """A simulation run aborted because a UE or flow could not be admitted."""

    def __init__(self, message: str, ue_id=None, flow_id=None):
        self.ue_id = ue_id
        self.flow_id = flow_id
        super().__init__(message)
