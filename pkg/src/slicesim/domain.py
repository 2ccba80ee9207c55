"""Slicing identifiers, subscriptions and flow descriptors."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import OutOfRange, ValidationError

SD_MAX = (1 << 24) - 1


@dataclass(frozen=True)
class SstCatalogEntry:
    sst: int
    service_type_name: str
    characteristics: str


SST_CATALOG: dict[int, SstCatalogEntry] = {
    e.sst: e
    for e in (
        SstCatalogEntry(1, "eMBB", "Slice suitable for the handling of 5G enhanced Mobile Broadband."),
        SstCatalogEntry(2, "URLLC", "Slice suitable for the handling of ultra-reliable low latency communications."),
        SstCatalogEntry(3, "MIoT", "Slice suitable for the handling of massive IoT."),
        SstCatalogEntry(4, "V2X", "Slice suitable for the handling of V2X services."),
        SstCatalogEntry(5, "HMTC", "Slice suitable for the handling of High-Performance Machine-Type Communications."),
        SstCatalogEntry(6, "HDLLC", "Slice suitable for the handling of High Data rate and Low Latency Communications."),
    )
}


def lookup_sst(sst: int) -> Optional[SstCatalogEntry]:
    return SST_CATALOG.get(sst)


@dataclass(frozen=True)
class SNssai:
    """Slice identifier. ``sd=None`` (absent) is distinct from ``sd=0``."""

    sst: int
    sd: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.sst, bool) or not isinstance(self.sst, int):
            raise OutOfRange(f"sst must be an integer, got {self.sst!r}")
        if not 0 <= self.sst <= 255:
            raise OutOfRange(f"sst {self.sst} outside [0, 255]")
        if self.sd is not None:
            if isinstance(self.sd, bool) or not isinstance(self.sd, int):
                raise OutOfRange(f"sd must be an integer, got {self.sd!r}")
            if not 0 <= self.sd <= SD_MAX:
                raise OutOfRange(f"sd {self.sd} does not fit in 24 bits")

    @property
    def standardized(self) -> Optional[str]:
        """Service type name when the SST is one of the six standardized values."""
        entry = SST_CATALOG.get(self.sst)
        return entry.service_type_name if entry else None

    def sort_key(self) -> tuple[int, int]:
        return (self.sst, -1 if self.sd is None else self.sd)

    def to_json(self) -> dict:
        return {"sst": self.sst, "sd": self.sd}

    @classmethod
    def from_json(cls, obj) -> "SNssai":
        if not isinstance(obj, dict) or "sst" not in obj:
            raise ValidationError("expected an object with an 'sst' field")
        return cls(obj["sst"], obj.get("sd"))

    def __str__(self):
        return f"{self.sst}" if self.sd is None else f"{self.sst}-{self.sd:06x}"

    def __lt__(self, other):
        if not isinstance(other, SNssai):
            return NotImplemented
        return self.sort_key() < other.sort_key()


def validate_snssai(sst: int, sd: Optional[int] = None) -> SNssai:
    return SNssai(sst, sd)


def validate_dnn(name) -> str:
    if not isinstance(name, str) or not name:
        raise ValidationError(f"DNN must be a non-empty string, got {name!r}")
    return name


@dataclass(frozen=True)
class SubscriberProfile:
    ue_id: str
    subscribed_snssais: frozenset
    allowed_dnns: frozenset
    subscription_type: int = 0

    def __post_init__(self):
        object.__setattr__(self, "subscribed_snssais", frozenset(self.subscribed_snssais))
        object.__setattr__(self, "allowed_dnns", frozenset(validate_dnn(d) for d in self.allowed_dnns))
        if not self.subscribed_snssais:
            raise ValidationError(f"UE {self.ue_id!r} has no subscribed S-NSSAI")


class TransportProtocol(str, enum.Enum):
    UDP = "UDP"
    TCP = "TCP"
    ANY = "ANY"


@dataclass(frozen=True)
class ConstantRate:
    rate_mbps: float
    start_time_s: float = 0.0

    def __post_init__(self):
        if not self.rate_mbps > 0:
            raise ValidationError(f"rate must be > 0, got {self.rate_mbps!r}")
        if not self.start_time_s >= 0:
            raise ValidationError(f"start_time must be >= 0, got {self.start_time_s!r}")


@dataclass(frozen=True)
class FiniteBurst:
    size_bytes: float
    requested_rate_mbps: float
    start_time_s: float = 0.0

    def __post_init__(self):
        if not self.size_bytes > 0:
            raise ValidationError(f"burst size must be > 0, got {self.size_bytes!r}")
        if not self.requested_rate_mbps > 0:
            raise ValidationError(f"rate must be > 0, got {self.requested_rate_mbps!r}")
        if not self.start_time_s >= 0:
            raise ValidationError(f"start_time must be >= 0, got {self.start_time_s!r}")

    @property
    def size_mbit(self) -> float:
        return self.size_bytes * 8 / 1e6


DemandProfile = Union[ConstantRate, FiniteBurst]


@dataclass(frozen=True)
class FlowDescriptor:
    flow_id: str
    ue_id: str
    dst_address: Optional[str] = None
    transport_protocol: TransportProtocol = TransportProtocol.ANY
    dst_port: Optional[int] = None
    app_id: Optional[str] = None
    demand_profile: DemandProfile = field(default_factory=lambda: ConstantRate(1.0))

    def __post_init__(self):
        object.__setattr__(self, "transport_protocol", TransportProtocol(self.transport_protocol))
        if self.dst_port is not None and not 0 <= self.dst_port <= 65535:
            raise ValidationError(f"dst_port {self.dst_port} outside [0, 65535]")

    @property
    def start_time_s(self) -> float:
        return self.demand_profile.start_time_s

    @property
    def is_burst(self) -> bool:
        return isinstance(self.demand_profile, FiniteBurst)
