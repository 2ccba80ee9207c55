"""URSP evaluation: map a new flow to ordered route candidates and walk the fallback."""

from __future__ import annotations

import enum
import ipaddress
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .domain import FlowDescriptor, SNssai, TransportProtocol, validate_dnn
from .errors import AllRsdsFailed, EstablishmentError, NoMatchingRule, ValidationFailed

log = logging.getLogger(__name__)

PortMatch = Union[int, tuple[int, int]]


class Rat(str, enum.Enum):
    NR = "NR"
    LTE = "LTE"
    ANY = "ANY"


@dataclass(frozen=True)
class TrafficDescriptor:
    match_dst_address: Optional[str] = None
    match_protocol: Optional[TransportProtocol] = None
    match_dst_port: Optional[PortMatch] = None
    match_app_id: Optional[str] = None
    match_all: bool = False

    def __post_init__(self):
        if self.match_protocol is not None:
            object.__setattr__(self, "match_protocol", TransportProtocol(self.match_protocol))
        if isinstance(self.match_dst_port, list):
            object.__setattr__(self, "match_dst_port", tuple(self.match_dst_port))

    def validate(self, path: str = "descriptor") -> None:
        matchers = (self.match_dst_address, self.match_protocol, self.match_dst_port, self.match_app_id)
        present = [m for m in matchers if m is not None]
        if self.match_all and present:
            raise ValidationFailed("match_all excludes every other matcher", path)
        if not self.match_all and not present:
            raise ValidationFailed("descriptor has no matcher", path)
        if isinstance(self.match_dst_port, tuple):
            if len(self.match_dst_port) != 2 or self.match_dst_port[0] > self.match_dst_port[1]:
                raise ValidationFailed(f"bad port range {self.match_dst_port!r}", path)

    def matches(self, flow: FlowDescriptor) -> bool:
        if self.match_all:
            return True
        if self.match_dst_address is not None and not _address_matches(self.match_dst_address, flow.dst_address):
            return False
        if self.match_protocol is not None and self.match_protocol is not TransportProtocol.ANY:
            if flow.transport_protocol is not self.match_protocol:
                return False
        if self.match_dst_port is not None:
            if flow.dst_port is None:
                return False
            if isinstance(self.match_dst_port, tuple):
                lo, hi = self.match_dst_port
                if not lo <= flow.dst_port <= hi:
                    return False
            elif flow.dst_port != self.match_dst_port:
                return False
        if self.match_app_id is not None and flow.app_id != self.match_app_id:
            return False
        return True


def _address_matches(pattern: str, address: Optional[str]) -> bool:
    if address is None:
        return False
    try:
        net = ipaddress.ip_network(pattern, strict=False)
        return ipaddress.ip_address(address) in net
    except ValueError:
        # opaque (non-IP) addresses compare literally
        return pattern == address


@dataclass(frozen=True)
class RouteSelectionDescriptor:
    rsd_precedence: int
    snssai: SNssai
    dnn: str
    rat: Optional[Rat] = None
    ssc_mode: Optional[int] = None

    def __post_init__(self):
        validate_dnn(self.dnn)
        if self.rat is not None:
            object.__setattr__(self, "rat", Rat(self.rat))
        if self.ssc_mode is not None and self.ssc_mode not in (1, 2, 3):
            raise ValidationFailed(f"ssc_mode must be 1, 2 or 3, got {self.ssc_mode!r}")


@dataclass(frozen=True)
class UrspRule:
    rule_precedence: int
    descriptor: TrafficDescriptor
    rsds: tuple

    def __post_init__(self):
        object.__setattr__(self, "rsds", tuple(sorted(self.rsds, key=lambda r: r.rsd_precedence)))

    def validate(self, path: str = "rule") -> None:
        self.descriptor.validate(f"{path}.descriptor")
        if not self.rsds:
            raise ValidationFailed("rule has no route selection descriptor", f"{path}.rsds")
        precedences = [r.rsd_precedence for r in self.rsds]
        if len(set(precedences)) != len(precedences):
            raise ValidationFailed("duplicate rsd_precedence", f"{path}.rsds")


@dataclass(frozen=True)
class UrspTable:
    """A subscriber's URSP rules, kept sorted by ascending rule precedence.

    Construction does not validate; call :meth:`validate` (``from_json`` and
    :func:`update_table` do it for you).
    """

    ue_id: str
    rules: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(sorted(self.rules, key=lambda r: r.rule_precedence)))

    def validate(self, path: str = "ursp") -> "UrspTable":
        precedences = [r.rule_precedence for r in self.rules]
        if len(set(precedences)) != len(precedences):
            raise ValidationFailed("duplicate rule_precedence", f"{path}.rules")
        for n, rule in enumerate(self.rules):
            rule.validate(f"{path}.rules[{n}]")
        return self


@dataclass(frozen=True)
class ForwardingRule:
    flow_id: str
    session_ref: int


@dataclass
class ForwardingTable:
    """Per-UE flow bindings; at most one rule per flow."""

    rules: dict = field(default_factory=dict)

    def install(self, flow_id: str, session_id: int) -> ForwardingRule:
        if flow_id in self.rules:
            raise ValidationFailed(f"flow {flow_id!r} is already bound to session {self.rules[flow_id].session_ref}")
        rule = ForwardingRule(flow_id, session_id)
        self.rules[flow_id] = rule
        return rule

    def release(self, flow_id: str) -> None:
        self.rules.pop(flow_id, None)

    def detach_session(self, session_id: int) -> list:
        dropped = [f for f, r in self.rules.items() if r.session_ref == session_id]
        for f in dropped:
            del self.rules[f]
        return dropped

    def get(self, flow_id: str) -> Optional[ForwardingRule]:
        return self.rules.get(flow_id)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules.values())


def match_flow(table: UrspTable, flow: FlowDescriptor) -> tuple:
    """Return the RSDs of the lowest-precedence rule matching ``flow``."""
    for rule in table.rules:
        if rule.descriptor.matches(flow):
            return rule.rsds
    raise NoMatchingRule(table.ue_id, flow.flow_id)


def select_route(
    table: UrspTable,
    flow: FlowDescriptor,
    establish: Callable,
    sessions: Iterable = (),
    forwarding: Optional[ForwardingTable] = None,
):
    """Bind ``flow`` to a PDU session, trying the matched RSDs in order.

    ``sessions`` holds the UE's active PDU sessions; one with the same
    (S-NSSAI, DNN) as an RSD is reused instead of calling ``establish``.
    ``establish(snssai, dnn)`` returns a session, or signals failure by
    returning None or raising :class:`EstablishmentError`. A failed RSD is not
    retried for the lifetime of the flow.

    Returns ``(session, forwarding_rule)``; the rule is installed in
    ``forwarding`` when given. Nothing is installed if every RSD fails.
    """
    rsds = match_flow(table, flow)
    existing = {}
    for s in sessions:
        existing.setdefault((s.snssai, s.dnn), s)
    attempts = []
    for rsd in rsds:
        session = existing.get((rsd.snssai, rsd.dnn))
        if session is None:
            try:
                session = establish(rsd.snssai, rsd.dnn)
            except EstablishmentError as exc:
                log.debug("flow %s: RSD %s/%s refused: %s", flow.flow_id, rsd.snssai, rsd.dnn, exc)
                attempts.append((rsd, exc))
                continue
            if session is None:
                attempts.append((rsd, None))
                continue
        if forwarding is not None:
            rule = forwarding.install(flow.flow_id, session.session_id)
        else:
            rule = ForwardingRule(flow.flow_id, session.session_id)
        return session, rule
    raise AllRsdsFailed(flow.flow_id, attempts)


def update_table(old: Optional[UrspTable], new: UrspTable) -> UrspTable:
    """Replace a UE's table. Flows already bound keep their forwarding rules."""
    if old is not None and old.ue_id != new.ue_id:
        raise ValidationFailed(f"table for UE {new.ue_id!r} cannot replace the table of {old.ue_id!r}")
    return new.validate()


# --- JSON -------------------------------------------------------------------

def _port_from_json(value):
    if value is None or isinstance(value, int):
        return value
    if isinstance(value, list):
        return tuple(value)
    if isinstance(value, dict):
        return (value["min"], value["max"])
    raise ValidationFailed(f"bad port matcher {value!r}")


def rule_from_json(obj: dict, path: str = "rule") -> UrspRule:
    try:
        d = obj.get("descriptor", {})
        descriptor = TrafficDescriptor(
            match_dst_address=d.get("match_dst_address"),
            match_protocol=d.get("match_protocol"),
            match_dst_port=_port_from_json(d.get("match_dst_port")),
            match_app_id=d.get("match_app_id"),
            match_all=bool(d.get("match_all", False)),
        )
        rsds = [
            RouteSelectionDescriptor(
                rsd_precedence=r["rsd_precedence"],
                snssai=SNssai.from_json(r["snssai"]),
                dnn=r["dnn"],
                rat=r.get("rat"),
                ssc_mode=r.get("ssc_mode"),
            )
            for r in obj["rsds"]
        ]
        return UrspRule(obj["rule_precedence"], descriptor, tuple(rsds))
    except ValidationFailed:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValidationFailed(f"malformed URSP rule: {exc}", path) from exc


def table_from_json(ue_id: str, rules: list, path: str = "ursp") -> UrspTable:
    table = UrspTable(ue_id, tuple(rule_from_json(r, f"{path}.rules[{n}]") for n, r in enumerate(rules)))
    return table.validate(path)


def rule_to_json(rule: UrspRule) -> dict:
    d = rule.descriptor
    desc = {}
    if d.match_all:
        desc["match_all"] = True
    if d.match_dst_address is not None:
        desc["match_dst_address"] = d.match_dst_address
    if d.match_protocol is not None:
        desc["match_protocol"] = d.match_protocol.value
    if d.match_dst_port is not None:
        desc["match_dst_port"] = list(d.match_dst_port) if isinstance(d.match_dst_port, tuple) else d.match_dst_port
    if d.match_app_id is not None:
        desc["match_app_id"] = d.match_app_id
    return {
        "rule_precedence": rule.rule_precedence,
        "descriptor": desc,
        "rsds": [
            {
                "rsd_precedence": r.rsd_precedence,
                "snssai": r.snssai.to_json(),
                "dnn": r.dnn,
                "rat": r.rat.value if r.rat else None,
                "ssc_mode": r.ssc_mode,
            }
            for r in rule.rsds
        ],
    }
