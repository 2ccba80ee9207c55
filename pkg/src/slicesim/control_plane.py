"""Registration and PDU session admission, collapsed into one authority.

The core network roles that would check subscription data, gNB slice support
and session limits are modelled as a single :class:`ControlPlane`; only the
admission outcomes are reproduced, not the message exchanges.
"""

from __future__ import annotations

import enum
import heapq
import ipaddress
import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .domain import FlowDescriptor, SNssai, SubscriberProfile
from .errors import (
    AlreadyRegistered,
    AlreadyReleased,
    NotRegistered,
    RegistrationRejected,
    SessionLimitExceeded,
    SliceNotAllowed,
    UnknownDnn,
    ValidationError,
)
from .ursp import ForwardingTable, UrspTable, select_route, update_table

log = logging.getLogger(__name__)

NR_MAX_SESSIONS = 16
LTE_MAX_SESSIONS = 8


@dataclass(frozen=True)
class GnbProfile:
    gnb_id: str
    supported_snssais: frozenset

    def __post_init__(self):
        object.__setattr__(self, "supported_snssais", frozenset(self.supported_snssais))
        if not self.supported_snssais:
            raise ValidationError(f"gNB {self.gnb_id!r} supports no slice")


@dataclass(frozen=True)
class SessionLimits:
    max_sessions: int = NR_MAX_SESSIONS

    def __post_init__(self):
        if self.max_sessions < 1:
            raise ValidationError("max_sessions must be >= 1", "limits.max_sessions")

    @classmethod
    def lte(cls) -> "SessionLimits":
        """The concurrent-APN ceiling of an LTE terminal."""
        return cls(LTE_MAX_SESSIONS)


class RegistrationStatus(str, enum.Enum):
    IDLE = "Idle"
    REGISTERED = "Registered"


@dataclass(frozen=True)
class RegistrationState:
    ue_id: str
    requested_nssais: frozenset
    allowed_nssais: frozenset
    status: RegistrationStatus
    profile: Optional[SubscriberProfile] = field(default=None, compare=False)

    @property
    def registered(self) -> bool:
        return self.status is RegistrationStatus.REGISTERED


class SessionState(str, enum.Enum):
    ACTIVE = "Active"
    RELEASED = "Released"


@dataclass(frozen=True)
class PduSession:
    session_id: int
    ue_id: str
    snssai: SNssai
    dnn: str
    ue_address: str
    state: SessionState = SessionState.ACTIVE

    @property
    def active(self) -> bool:
        return self.state is SessionState.ACTIVE


def register_ue(profile: SubscriberProfile, requested: Optional[Iterable[SNssai]], gnb: GnbProfile) -> RegistrationState:
    """Grant ``requested ∩ subscribed ∩ gNB-supported``; reject only when empty.

    ``requested=None`` requests every subscribed slice.
    """
    requested = frozenset(profile.subscribed_snssais if requested is None else requested)
    subscribed = requested & profile.subscribed_snssais
    if not subscribed:
        raise RegistrationRejected(profile.ue_id, RegistrationRejected.NOT_SUBSCRIBED)
    allowed = subscribed & gnb.supported_snssais
    if not allowed:
        raise RegistrationRejected(profile.ue_id, RegistrationRejected.NOT_SUPPORTED_AT_GNB)
    return RegistrationState(profile.ue_id, requested, allowed, RegistrationStatus.REGISTERED, profile)


class _AddressPool:
    """Sequential host addresses inside one /16 per DNN; lowest free address first."""

    def __init__(self, network: ipaddress.IPv4Network):
        self.network = network
        self._next = 1
        self._free: list[int] = []

    def take(self) -> str:
        if self._free:
            host = heapq.heappop(self._free)
        else:
            host = self._next
            self._next += 1
            if host >= self.network.num_addresses - 1:
                raise SessionLimitExceeded(f"address pool {self.network} exhausted")
        return str(self.network.network_address + host)

    def give_back(self, address: str) -> None:
        heapq.heappush(self._free, int(ipaddress.IPv4Address(address)) - int(self.network.network_address))


class ControlPlane:
    """Single logical admission authority for one gNB and its subscribers."""

    def __init__(self, gnb: GnbProfile, limits: SessionLimits = SessionLimits(), subscribers: Iterable[SubscriberProfile] = ()):
        self.gnb = gnb
        self.limits = limits
        self.subscribers: dict[str, SubscriberProfile] = {}
        self.registrations: dict[str, RegistrationState] = {}
        self.sessions: dict[int, PduSession] = {}
        self.ursp: dict[str, UrspTable] = {}
        self.forwarding: dict[str, ForwardingTable] = {}
        self._pools: dict[str, _AddressPool] = {}
        self._next_session_id = 1
        for p in subscribers:
            self.add_subscriber(p)

    def add_subscriber(self, profile: SubscriberProfile) -> None:
        if profile.ue_id in self.subscribers:
            raise ValidationError(f"duplicate subscriber {profile.ue_id!r}")
        self.subscribers[profile.ue_id] = profile

    # -- registration -------------------------------------------------------

    def register(self, ue_id: str, requested: Optional[Iterable[SNssai]] = None) -> RegistrationState:
        if ue_id not in self.subscribers:
            raise RegistrationRejected(ue_id, RegistrationRejected.NOT_SUBSCRIBED)
        current = self.registrations.get(ue_id)
        if current is not None and current.registered:
            raise AlreadyRegistered(f"UE {ue_id!r} is already registered")
        state = register_ue(self.subscribers[ue_id], requested, self.gnb)
        self.registrations[ue_id] = state
        self.forwarding.setdefault(ue_id, ForwardingTable())
        log.debug("UE %s registered, allowed %s", ue_id, sorted(map(str, state.allowed_nssais)))
        return state

    def _registered(self, ue_id: str) -> RegistrationState:
        state = self.registrations.get(ue_id)
        if state is None or not state.registered:
            raise NotRegistered(f"UE {ue_id!r} is not registered")
        return state

    # -- sessions -----------------------------------------------------------

    def active_sessions(self, ue_id: Optional[str] = None) -> list[PduSession]:
        return [
            s for s in self.sessions.values()
            if s.active and (ue_id is None or s.ue_id == ue_id)
        ]

    def establish_pdu_session(self, ue_id: str, snssai: SNssai, dnn: str) -> PduSession:
        ue = self._registered(ue_id)
        if snssai not in ue.allowed_nssais:
            raise SliceNotAllowed(f"S-NSSAI {snssai} is not allowed for UE {ue_id!r}")
        if dnn not in self.subscribers[ue_id].allowed_dnns:
            raise UnknownDnn(f"DNN {dnn!r} is not allowed for UE {ue_id!r}")
        if len(self.active_sessions(ue_id)) >= self.limits.max_sessions:
            raise SessionLimitExceeded(
                f"UE {ue_id!r} already holds {self.limits.max_sessions} active sessions"
            )
        pool = self._pools.get(dnn)
        if pool is None:
            index = len(self._pools)
            if index > 255:
                raise SessionLimitExceeded("no address space left for another DNN")
            pool = self._pools[dnn] = _AddressPool(ipaddress.IPv4Network(f"10.{index}.0.0/16"))
        session = PduSession(self._next_session_id, ue_id, snssai, dnn, pool.take())
        self._next_session_id += 1
        self.sessions[session.session_id] = session
        log.debug("session %d: UE %s on %s/%s at %s", session.session_id, ue_id, snssai, dnn, session.ue_address)
        return session

    def release_pdu_session(self, session) -> PduSession:
        session_id = session.session_id if isinstance(session, PduSession) else session
        current = self.sessions[session_id]
        if not current.active:
            raise AlreadyReleased(f"session {session_id} is already released")
        released = replace(current, state=SessionState.RELEASED)
        self.sessions[session_id] = released
        self._pools[current.dnn].give_back(current.ue_address)
        self.forwarding[current.ue_id].detach_session(session_id)
        return released

    # -- URSP ---------------------------------------------------------------

    def configure_ursp(self, ue_id: str, table: UrspTable) -> bool:
        self._registered(ue_id)
        self.ursp[ue_id] = update_table(self.ursp.get(ue_id), table)
        return True

    def route_flow(self, flow: FlowDescriptor):
        """Bind a new flow through the UE's URSP table; see :func:`select_route`."""
        self._registered(flow.ue_id)
        table = self.ursp.get(flow.ue_id, UrspTable(flow.ue_id))
        return select_route(
            table,
            flow,
            lambda snssai, dnn: self.establish_pdu_session(flow.ue_id, snssai, dnn),
            self.active_sessions(flow.ue_id),
            self.forwarding[flow.ue_id],
        )

    def release_flow(self, ue_id: str, flow_id: str) -> None:
        self.forwarding[ue_id].release(flow_id)

    # -- checks -------------------------------------------------------------

    def check_invariants(self) -> None:
        """Raise AssertionError if any admission invariant is broken."""
        seen = set()
        per_ue: dict[str, int] = {}
        for s in self.active_sessions():
            assert s.ue_address not in seen, f"address {s.ue_address} reused"
            seen.add(s.ue_address)
            assert s.snssai in self.registrations[s.ue_id].allowed_nssais
            per_ue[s.ue_id] = per_ue.get(s.ue_id, 0) + 1
        assert all(n <= self.limits.max_sessions for n in per_ue.values())
        for ue_id, table in self.forwarding.items():
            for rule in table:
                s = self.sessions.get(rule.session_ref)
                assert s is not None and s.active and s.ue_id == ue_id, f"dangling rule {rule}"
