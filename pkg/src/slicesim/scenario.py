"""Scenario files: JSON parsing and whole-file cross-validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .control_plane import GnbProfile, SessionLimits
from .domain import ConstantRate, FiniteBurst, FlowDescriptor, SNssai, SubscriberProfile
from .errors import OutOfRange, ParseError, SliceSimError, ValidationError
from .scheduler import ChannelModel, SliceConfig
from .ursp import UrspTable, table_from_json

DEFAULT_TICK = 0.1
DEFAULT_URSP = "*"


@dataclass
class Scenario:
    name: str
    channel: ChannelModel
    slices: list
    gnb: GnbProfile
    limits: SessionLimits
    ues: list
    flows: list
    tick: float = DEFAULT_TICK
    horizon: float = 3600.0
    seed: int = 0
    requested: dict = field(default_factory=dict)
    #: ue_id -> UrspTable; key "*" is the table for UEs without their own
    ursp: dict = field(default_factory=dict)
    #: (time_s, ue_id, UrspTable), applied when the clock reaches time_s
    ursp_updates: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def profile(self, ue_id: str) -> SubscriberProfile:
        for p in self.ues:
            if p.ue_id == ue_id:
                return p
        raise KeyError(ue_id)

    def table_for(self, ue_id: str) -> UrspTable:
        table = self.ursp.get(ue_id)
        if table is None:
            default = self.ursp.get(DEFAULT_URSP)
            table = UrspTable(ue_id, default.rules if default else ())
        return table


# --- helpers ------------------------------------------------------------------

_MISSING = object()


def _get(obj, key, path, kind=None, default=_MISSING):
    if not isinstance(obj, dict):
        raise ValidationError("expected an object", path)
    if key not in obj or obj[key] is None:
        if default is _MISSING:
            raise ValidationError(f"missing required field {key!r}", path)
        return default
    value = obj[key]
    where = f"{path}.{key}"
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"expected a number, got {value!r}", where)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"expected an integer, got {value!r}", where)
        return value
    if kind is not None and not isinstance(value, kind):
        raise ValidationError(f"expected {kind.__name__}, got {type(value).__name__}", where)
    return value


def _snssai(obj, path) -> SNssai:
    try:
        return SNssai.from_json(obj)
    except (ValidationError, OutOfRange) as exc:
        raise ValidationError(str(exc), path) from None


def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError as exc:
        if exc.path and exc.path.startswith("$"):
            raise
        raise ValidationError(exc.message, path) from None
    except (OutOfRange, ValueError, TypeError) as exc:
        raise ValidationError(str(exc), path) from None


# --- sections -----------------------------------------------------------------

def _demand(obj, path):
    kind = _get(obj, "type", path, str)
    if kind == "constant_rate":
        return _wrap(path, ConstantRate, _get(obj, "rate_mbps", path, float),
                     _get(obj, "start_time_s", path, float, 0.0))
    if kind == "finite_burst":
        return _wrap(path, FiniteBurst, _get(obj, "size_bytes", path, float),
                     _get(obj, "requested_rate_mbps", path, float),
                     _get(obj, "start_time_s", path, float, 0.0))
    raise ValidationError(f"unknown demand type {kind!r}", f"{path}.type")


def _flow(obj, path) -> FlowDescriptor:
    return _wrap(
        path,
        FlowDescriptor,
        flow_id=_get(obj, "flow_id", path, str),
        ue_id=_get(obj, "ue_id", path, str),
        dst_address=_get(obj, "dst_address", path, str, None),
        transport_protocol=_get(obj, "transport_protocol", path, str, "ANY"),
        dst_port=_get(obj, "dst_port", path, int, None),
        app_id=_get(obj, "app_id", path, str, None),
        demand_profile=_demand(_get(obj, "demand", path, dict), f"{path}.demand"),
    )


def _ue(obj, path) -> tuple[SubscriberProfile, Optional[frozenset]]:
    ue_id = _get(obj, "ue_id", path, str)
    subs = _get(obj, "subscribed_snssais", path, list)
    dnns = _get(obj, "allowed_dnns", path, list)
    if len(set(map(str, dnns))) != len(dnns):
        raise ValidationError("duplicate DNN", f"{path}.allowed_dnns")
    profile = _wrap(
        path,
        SubscriberProfile,
        ue_id,
        frozenset(_snssai(s, f"{path}.subscribed_snssais[{n}]") for n, s in enumerate(subs)),
        frozenset(dnns),
        _get(obj, "subscription_type", path, int, 0),
    )
    requested = _get(obj, "requested_nssais", path, list, None)
    if requested is not None:
        requested = frozenset(_snssai(s, f"{path}.requested_nssais[{n}]") for n, s in enumerate(requested))
    return profile, requested


def scenario_from_json(doc) -> Scenario:
    p = "$"
    if not isinstance(doc, dict):
        raise ValidationError("scenario must be a JSON object", p)

    clock = _get(doc, "clock", p, dict, {})
    tick = _get(clock, "tick_s", "$.clock", float, DEFAULT_TICK)
    horizon = _get(clock, "horizon_s", "$.clock", float, 3600.0)
    if not tick > 0:
        raise ValidationError("tick must be > 0", "$.clock.tick_s")
    if not horizon > 0:
        raise ValidationError("horizon must be > 0", "$.clock.horizon_s")

    ch = _get(doc, "channel", p, dict)
    channel = _wrap("$.channel", ChannelModel,
                    _get(ch, "effective_capacity_mbps", "$.channel", float),
                    _get(ch, "quantum_mbps", "$.channel", float, None))

    slices = []
    for n, s in enumerate(_get(doc, "slices", p, list)):
        sp = f"$.slices[{n}]"
        slices.append(_wrap(sp, SliceConfig,
                            _snssai(_get(s, "snssai", sp, dict), f"{sp}.snssai"),
                            _get(s, "priority", sp, int),
                            _get(s, "residual_floor", sp, float, 0.0),
                            _get(s, "name", sp, str, None)))
    if not slices:
        raise ValidationError("at least one slice is required", "$.slices")
    if len({s.priority for s in slices}) != len(slices):
        raise ValidationError("slice priorities must be unique", "$.slices")
    configured = {s.snssai for s in slices}
    if len(configured) != len(slices):
        raise ValidationError("duplicate slice S-NSSAI", "$.slices")

    g = _get(doc, "gnb", p, dict)
    gnb = _wrap("$.gnb", GnbProfile, _get(g, "gnb_id", "$.gnb", str, "gnb-1"),
                frozenset(_snssai(s, f"$.gnb.supported_snssais[{n}]")
                          for n, s in enumerate(_get(g, "supported_snssais", "$.gnb", list))))
    for s in sorted(gnb.supported_snssais):
        if s not in configured:
            raise ValidationError(f"gNB supports slice {s} but no slice config exists for it", "$.gnb.supported_snssais")

    lim = _get(doc, "limits", p, dict, {})
    limits = _wrap("$.limits", SessionLimits, _get(lim, "max_sessions", "$.limits", int, 16))

    ues, requested = [], {}
    for n, u in enumerate(_get(doc, "ues", p, list)):
        profile, req = _ue(u, f"$.ues[{n}]")
        if any(x.ue_id == profile.ue_id for x in ues):
            raise ValidationError(f"duplicate ue_id {profile.ue_id!r}", f"$.ues[{n}].ue_id")
        ues.append(profile)
        if req is not None:
            requested[profile.ue_id] = req
    ue_ids = {u.ue_id for u in ues}
    known_dnns = set().union(*(u.allowed_dnns for u in ues)) if ues else set()
    known_slices = configured | gnb.supported_snssais | set().union(*(u.subscribed_snssais for u in ues)) if ues else configured

    def _table(ue_id, rules, path):
        if ue_id != DEFAULT_URSP and ue_id not in ue_ids:
            raise ValidationError(f"URSP table for unknown UE {ue_id!r}", f"{path}.ue_id")
        table = _wrap(path, table_from_json, ue_id, rules, path)
        for rn, rule in enumerate(table.rules):
            for rsd in rule.rsds:
                if rsd.snssai not in known_slices:
                    raise ValidationError(f"RSD names unknown slice {rsd.snssai}", f"{path}.rules[{rn}]")
                if rsd.dnn not in known_dnns:
                    raise ValidationError(f"RSD names unknown DNN {rsd.dnn!r}", f"{path}.rules[{rn}]")
        return table

    ursp = {}
    for n, t in enumerate(_get(doc, "ursp", p, list, [])):
        tp = f"$.ursp[{n}]"
        ue_id = _get(t, "ue_id", tp, str)
        if ue_id in ursp:
            raise ValidationError(f"duplicate URSP table for {ue_id!r}", f"{tp}.ue_id")
        ursp[ue_id] = _table(ue_id, _get(t, "rules", tp, list), tp)

    updates = []
    for n, t in enumerate(_get(doc, "ursp_updates", p, list, [])):
        tp = f"$.ursp_updates[{n}]"
        ue_id = _get(t, "ue_id", tp, str)
        if ue_id == DEFAULT_URSP:
            raise ValidationError("updates must name a UE", f"{tp}.ue_id")
        time_s = _get(t, "time_s", tp, float)
        if time_s < 0:
            raise ValidationError("time must be >= 0", f"{tp}.time_s")
        updates.append((time_s, ue_id, _table(ue_id, _get(t, "rules", tp, list), tp)))
    updates.sort(key=lambda u: u[0])

    flows = []
    seen = set()
    for n, f in enumerate(_get(doc, "flows", p, list, [])):
        fp = f"$.flows[{n}]"
        flow = _flow(f, fp)
        if flow.flow_id in seen:
            raise ValidationError(f"duplicate flow_id {flow.flow_id!r}", f"{fp}.flow_id")
        if flow.ue_id not in ue_ids:
            raise ValidationError(f"flow {flow.flow_id!r} references unknown ue_id {flow.ue_id!r}", f"{fp}.ue_id")
        seen.add(flow.flow_id)
        flows.append(flow)

    notes = _get(doc, "notes", p, list, [])
    return Scenario(
        name=_get(doc, "name", p, str, "scenario"),
        channel=channel,
        slices=slices,
        gnb=gnb,
        limits=limits,
        ues=ues,
        flows=flows,
        tick=tick,
        horizon=horizon,
        seed=_get(doc, "seed", p, int, 0),
        requested=requested,
        ursp=ursp,
        ursp_updates=updates,
        notes=notes,
    )


def parse_json_bytes(data: bytes, what: str = "file"):
    if not data.strip():
        raise ParseError(f"empty {what}", 0)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{what} is not UTF-8", exc.start) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, len(text[: exc.pos].encode("utf-8"))) from None


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``scenario1.json`` ...)."""
    if not name.endswith(".json"):
        name += ".json"
    return Path(str(resources.files("slicesim") / "scenarios" / name))


def bundled_names() -> list[str]:
    return sorted(p.name for p in resources.files("slicesim").joinpath("scenarios").iterdir() if p.name.endswith(".json"))


def resolve_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled scenario of that name."""
    p = Path(path)
    if p.exists():
        return p
    if p.parent == Path(".") and (p.name in bundled_names() or p.name + ".json" in bundled_names()):
        return bundled_path(p.name)
    return p


def load_scenario(path) -> Scenario:
    p = resolve_path(path)
    data = p.read_bytes()
    return scenario_from_json(parse_json_bytes(data, f"scenario {p.name}"))


__all__ = [
    "Scenario", "load_scenario", "scenario_from_json", "parse_json_bytes",
    "bundled_path", "bundled_names", "resolve_path", "SliceSimError",
]
