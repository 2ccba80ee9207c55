"""Per-tick allocation of channel capacity across slices and sessions.

Radio resource blocks are treated as a capacity fluid in Mbit/s. Slices are
served in strict priority order. A slice with residual floor ``eps`` leaves at
least ``eps`` of what remains to lower-priority slices that have demand.
Inside a slice, capacity is shared equal-share max-min (water-filling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from ._kernels_py import waterfill as _waterfill_generic
from .domain import SNssai
from .errors import UnknownSlice, ValidationError

QUANTUM_TOL = 1e-9


@dataclass(frozen=True)
class ChannelModel:
    effective_capacity: float
    quantum: Optional[float] = None

    def __post_init__(self):
        if not self.effective_capacity > 0:
            raise ValidationError("effective_capacity must be > 0", "channel.effective_capacity_mbps")
        if self.quantum is not None and not 0 < self.quantum <= self.effective_capacity:
            raise ValidationError("quantum must be in (0, effective_capacity]", "channel.quantum_mbps")


@dataclass(frozen=True)
class SliceConfig:
    snssai: SNssai
    priority: int
    residual_floor: float = 0.0
    name: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.residual_floor < 1.0:
            raise ValidationError(f"residual_floor must be in [0, 1), got {self.residual_floor!r}")


@dataclass(frozen=True)
class DemandEntry:
    session_id: int
    ue_id: str
    snssai: SNssai
    demand: float

    def __post_init__(self):
        if not self.demand >= 0:
            raise ValidationError(f"negative demand for session {self.session_id}")


@dataclass(frozen=True)
class DemandVector:
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))


@dataclass(frozen=True)
class Allocation:
    session_id: int
    alloc: float
    demand: float = math.inf


@dataclass(frozen=True)
class SliceSchedule:
    tick_time: float
    allocations: tuple = field(default_factory=tuple)

    @property
    def total(self) -> float:
        return sum(a.alloc for a in self.allocations)

    def by_session(self) -> dict:
        return {a.session_id: a.alloc for a in self.allocations}


def intra_slice_maxmin(budget, demands: Sequence) -> list:
    """Water-fill ``budget`` over ``demands``; exact for Fraction inputs.

    >>> intra_slice_maxmin(10, [2, 20])
    [2, 8.0]
    """
    allocs, _ = _waterfill_generic(budget, list(demands))
    return allocs


def slice_ranks(slices: Sequence[SliceConfig]) -> tuple[dict, np.ndarray]:
    """Map each S-NSSAI to its priority position and return the eps array."""
    ordered = sorted(slices, key=lambda s: s.priority)
    priorities = [s.priority for s in ordered]
    if len(set(priorities)) != len(priorities):
        raise ValidationError("slice priorities must be unique", "slices")
    rank = {s.snssai: r for r, s in enumerate(ordered)}
    if len(rank) != len(ordered):
        raise ValidationError("duplicate slice S-NSSAI", "slices")
    eps = np.array([s.residual_floor for s in ordered], dtype=np.float64)
    return rank, eps


def allocate(channel: ChannelModel, slices: Sequence[SliceConfig], demands: DemandVector,
             tick_time: float = 0.0, kernel=None) -> SliceSchedule:
    rank_of, eps = slice_ranks(slices)
    entries = demands.entries
    try:
        rank = np.array([rank_of[e.snssai] for e in entries], dtype=np.int64)
    except KeyError as exc:
        raise UnknownSlice(f"demand on unconfigured slice {exc.args[0]}") from None
    dem = np.array([e.demand for e in entries], dtype=np.float64)
    out = np.zeros(len(entries), dtype=np.float64)
    (kernel or kernels.active).cascade(channel.effective_capacity, dem, rank, eps, out)
    schedule = SliceSchedule(
        tick_time,
        tuple(Allocation(e.session_id, float(a), e.demand) for e, a in zip(entries, out)),
    )
    if channel.quantum is not None:
        schedule = quantize(schedule, channel.quantum)
    return schedule


def quantize_arrays(alloc: np.ndarray, demand: np.ndarray, session_ids: np.ndarray, quantum: float) -> np.ndarray:
    """Round allocations down to whole quanta, then hand freed quanta back.

    Freed capacity goes out one quantum at a time to the entry with the largest
    unmet demand that can absorb a whole quantum; ties go to the lowest
    session id. The total never exceeds the input total.
    """
    q = np.floor(alloc / quantum + QUANTUM_TOL) * quantum
    q = np.minimum(q, np.floor(demand / quantum + QUANTUM_TOL) * quantum)
    freed = float(alloc.sum() - q.sum())
    order = np.argsort(session_ids, kind="stable")
    while freed >= quantum * (1 - QUANTUM_TOL):
        unmet = demand[order] - q[order]
        eligible = unmet >= quantum * (1 - QUANTUM_TOL)
        if not eligible.any():
            break
        unmet = np.where(eligible, unmet, -np.inf)
        pick = order[int(np.argmax(unmet))]  # argmax returns the first maximum
        q[pick] += quantum
        freed -= quantum
    return q


def quantize(schedule: SliceSchedule, quantum: float) -> SliceSchedule:
    if not quantum > 0:
        raise ValidationError("quantum must be > 0")
    allocs = schedule.allocations
    if not allocs:
        return schedule
    q = quantize_arrays(
        np.array([a.alloc for a in allocs], dtype=np.float64),
        np.array([a.demand for a in allocs], dtype=np.float64),
        np.array([a.session_id for a in allocs]),
        quantum,
    )
    return SliceSchedule(
        schedule.tick_time,
        tuple(Allocation(a.session_id, float(v), a.demand) for a, v in zip(allocs, q)),
    )
