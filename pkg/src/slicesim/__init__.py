"""Deterministic 5G network-slicing simulator and tariff-equilibrium toolkit."""

from .domain import (
    SST_CATALOG, ConstantRate, FiniteBurst, FlowDescriptor, SNssai, SstCatalogEntry,
    SubscriberProfile, TransportProtocol, lookup_sst, validate_snssai,
)
from .control_plane import ControlPlane, GnbProfile, PduSession, RegistrationState, SessionLimits, register_ue
from .ursp import (
    ForwardingRule, ForwardingTable, RouteSelectionDescriptor, TrafficDescriptor, UrspRule, UrspTable,
    match_flow, select_route, update_table,
)
from .scheduler import (
    ChannelModel, DemandEntry, DemandVector, SliceConfig, SliceSchedule, allocate, intra_slice_maxmin, quantize,
)
from .scenario import Scenario, load_scenario
from .engine import Engine, MetricsTrace, run, summarize
from . import kernels

__version__ = "0.1.0"
