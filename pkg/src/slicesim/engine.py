"""Discrete-time fluid simulation of slice-scheduled flows.

Each tick the engine activates flows whose start time has come, builds the
demand of every active session, asks the scheduler kernel for an allocation,
and drains finite bursts. Everything is deterministic; the seed is carried
for future stochastic traffic only.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .control_plane import ControlPlane, PduSession
from .domain import FlowDescriptor, SNssai
from .errors import AdmissionError, EmptyWindow, SliceSimError, UnknownSlice
from .scenario import Scenario
from .scheduler import quantize_arrays, slice_ranks

log = logging.getLogger(__name__)

TIME_TOL = 1e-9
DONE_TOL = 1e-12
MBIT_TO_BYTES = 1e6 / 8

CSV_HEADER = "time_s,session_id,ue_id,sst,sd,demand_mbps,alloc_mbps,bytes_remaining\n"


@dataclass
class SimClock:
    tick: float = 0.1
    horizon: float = 3600.0
    index: int = 0

    def __post_init__(self):
        if not self.tick > 0:
            raise ValueError("tick must be > 0")

    @property
    def now(self) -> float:
        # multiply rather than accumulate: no drift over long runs
        return self.index * self.tick

    def advance(self) -> None:
        self.index += 1


class FlowStatus(str, enum.Enum):
    PENDING = "Pending"
    ACTIVE = "Active"
    COMPLETED = "Completed"


_STATUS = (FlowStatus.PENDING, FlowStatus.ACTIVE, FlowStatus.COMPLETED)


@dataclass(frozen=True)
class FlowState:
    flow: FlowDescriptor
    session: Optional[PduSession]
    bytes_remaining: Optional[float]
    status: FlowStatus
    delivered_bytes: float
    completion_time: Optional[float]


@dataclass(frozen=True)
class SessionInfo:
    session_id: int
    ue_id: str
    snssai: SNssai
    slice_name: Optional[str]
    flow_ids: tuple


@dataclass(frozen=True)
class FlowSummary:
    flow_id: str
    ue_id: str
    session_id: Optional[int]
    snssai: Optional[SNssai]
    kind: str
    start_time_s: float
    completion_time_s: Optional[float]
    duration_s: Optional[float]
    size_bytes: Optional[float]
    delivered_bytes: float
    mean_rate_mbps: float

    def to_json(self) -> dict:
        return {
            "flow_id": self.flow_id,
            "ue_id": self.ue_id,
            "session_id": self.session_id,
            "sst": self.snssai.sst if self.snssai else None,
            "sd": self.snssai.sd if self.snssai else None,
            "kind": self.kind,
            "start_time_s": self.start_time_s,
            "completion_time_s": self.completion_time_s,
            "duration_s": self.duration_s,
            "size_bytes": self.size_bytes,
            "delivered_bytes": self.delivered_bytes,
            "mean_rate_mbps": self.mean_rate_mbps,
        }


class MetricsTrace:
    """Per-tick session rows plus per-flow summaries of one run.

    Row columns are numpy arrays: ``tick_index``, ``session`` (index into
    :attr:`sessions`), ``demand``/``alloc`` in Mbit/s, ``bytes_remaining``
    (NaN for sessions without bursts), plus ``split`` and ``rate_pre``.
    ``alloc`` is the tick average. When a burst finishes mid-tick, rates
    change at that instant: ``rate_pre`` holds over the first ``split``
    seconds of the tick and the remainder of the tick makes up the average.
    Otherwise ``split`` equals the tick and ``rate_pre`` equals ``alloc``.
    """

    def __init__(self, tick, end_time, sessions, flows, slices, columns):
        self.tick = tick
        self.end_time = end_time
        self.sessions: list[SessionInfo] = sessions
        self.flows: list[FlowSummary] = flows
        self.slices = slices
        self.tick_index = columns["tick_index"]
        self.session = columns["session"]
        self.demand = columns["demand"]
        self.alloc = columns["alloc"]
        self.bytes_remaining = columns["bytes_remaining"]
        self.rate_pre = columns["rate_pre"]
        self.split = columns["split"]

    @property
    def time(self) -> np.ndarray:
        return self.tick_index * self.tick

    def __len__(self):
        return len(self.session)

    def flow(self, flow_id: str) -> FlowSummary:
        for f in self.flows:
            if f.flow_id == flow_id:
                return f
        raise KeyError(flow_id)

    def session_slice(self) -> np.ndarray:
        """Slice position (in :attr:`slices` order) of every session."""
        pos = {s.snssai: n for n, s in enumerate(self.slices)}
        return np.array([pos[s.snssai] for s in self.sessions], dtype=np.int64)

    def write_csv(self, fh) -> None:
        fh.write(CSV_HEADER)
        prefix = [
            f"{s.session_id},{s.ue_id},{s.snssai.sst},{'' if s.snssai.sd is None else s.snssai.sd}"
            for s in self.sessions
        ]
        times = (self.tick_index * self.tick).tolist()
        rem = self.bytes_remaining.tolist()
        lines = []
        for t, s, d, a, r in zip(times, self.session.tolist(), self.demand.tolist(), self.alloc.tolist(), rem):
            rs = "" if r != r else f"{r:.3f}"
            lines.append(f"{t:.6f},{prefix[s]},{d:.6f},{a:.6f},{rs}\n")
            if len(lines) >= 65536:
                fh.write("".join(lines))
                lines.clear()
        fh.write("".join(lines))

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


class Engine:
    """One simulation run over a validated :class:`Scenario`."""

    def __init__(self, scenario: Scenario, tick: Optional[float] = None, seed: Optional[int] = None, kernel=None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.clock = SimClock(tick or scenario.tick, scenario.horizon)
        self.kernel = kernel or kernels.active
        self.capacity = scenario.channel.effective_capacity
        self.quantum = scenario.channel.quantum
        self._slice_order = sorted(scenario.slices, key=lambda s: s.priority)
        self._rank_of, self._eps = slice_ranks(scenario.slices)
        self.control = ControlPlane(scenario.gnb, scenario.limits, scenario.ues)

        flows = scenario.flows
        self.flows: list[FlowDescriptor] = list(flows)
        n = len(flows)
        self.f_burst = np.array([f.is_burst for f in flows], dtype=bool)
        self.f_rate = np.array(
            [f.demand_profile.requested_rate_mbps if f.is_burst else f.demand_profile.rate_mbps for f in flows],
            dtype=np.float64,
        )
        self.f_size = np.array([f.demand_profile.size_mbit if f.is_burst else 0.0 for f in flows], dtype=np.float64)
        self.f_rem = self.f_size.copy()
        self.f_start = np.array([f.start_time_s for f in flows], dtype=np.float64)
        self.f_status = np.zeros(n, dtype=np.int8)
        self.f_sess = np.full(n, -1, dtype=np.int64)
        self.f_delivered = np.zeros(n, dtype=np.float64)
        self.f_done_at = np.full(n, np.nan)
        self._pending = sorted(range(n), key=lambda i: (self.f_start[i], i))
        self._pending_pos = 0
        self._updates = list(scenario.ursp_updates)
        self._update_pos = 0

        self.sessions: list[PduSession] = []
        self._session_pos: dict[int, int] = {}
        self._session_flows: list[list[str]] = []
        self.s_rank = np.zeros(0, dtype=np.int64)
        self.s_id = np.zeros(0, dtype=np.int64)

        self._chunks: list = []
        self._started = False

    # -- setup ----------------------------------------------------------------

    def start(self) -> None:
        """Register every UE and install its URSP table."""
        if self._started:
            return
        for profile in self.scenario.ues:
            try:
                self.control.register(profile.ue_id, self.scenario.requested.get(profile.ue_id))
                self.control.configure_ursp(profile.ue_id, self.scenario.table_for(profile.ue_id))
            except SliceSimError as exc:
                raise AdmissionError(f"UE {profile.ue_id!r}: {exc}", ue_id=profile.ue_id) from exc
        self._started = True

    def _activate(self, fi: int) -> None:
        flow = self.flows[fi]
        try:
            session, _ = self.control.route_flow(flow)
        except SliceSimError as exc:
            raise AdmissionError(
                f"flow {flow.flow_id!r} of UE {flow.ue_id!r}: {exc}", ue_id=flow.ue_id, flow_id=flow.flow_id
            ) from exc
        pos = self._session_pos.get(session.session_id)
        if pos is None:
            if session.snssai not in self._rank_of:
                raise UnknownSlice(f"session {session.session_id} is on unconfigured slice {session.snssai}")
            pos = len(self.sessions)
            self._session_pos[session.session_id] = pos
            self.sessions.append(session)
            self._session_flows.append([])
            self.s_rank = np.append(self.s_rank, self._rank_of[session.snssai])
            self.s_id = np.append(self.s_id, session.session_id)
        self._session_flows[pos].append(flow.flow_id)
        self.f_sess[fi] = pos
        self.f_status[fi] = 1
        log.debug("t=%.3f flow %s active on session %d", self.clock.now, flow.flow_id, session.session_id)

    # -- one tick -------------------------------------------------------------

    def _session_alloc(self, fdemand: np.ndarray, sess: np.ndarray):
        """Aggregate flow demand per session, allocate, split back to flows."""
        uniq, pos = np.unique(sess, return_inverse=True)
        sdem = np.zeros(len(uniq))
        np.add.at(sdem, pos, fdemand)
        salloc = np.zeros(len(uniq))
        self.kernel.cascade(self.capacity, sdem, self.s_rank[uniq], self._eps, salloc)
        if self.quantum is not None:
            salloc = quantize_arrays(salloc, sdem, self.s_id[uniq], self.quantum)
        if len(uniq) == len(sess):
            falloc = salloc[pos]
        else:
            falloc = np.zeros(len(sess))
            for k in range(len(uniq)):
                members = np.flatnonzero(pos == k)
                if len(members) == 1:
                    falloc[members[0]] = salloc[k]
                else:
                    allocs, _ = self.kernel.waterfill(float(salloc[k]), fdemand[members])
                    falloc[members] = allocs
        return uniq, pos, sdem, salloc, falloc

    def step(self) -> None:
        self.start()
        now = self.clock.now
        dt = self.clock.tick

        while self._update_pos < len(self._updates) and self._updates[self._update_pos][0] <= now + TIME_TOL:
            _, ue_id, table = self._updates[self._update_pos]
            self.control.configure_ursp(ue_id, table)
            self._update_pos += 1
        while self._pending_pos < len(self._pending):
            fi = self._pending[self._pending_pos]
            if self.f_start[fi] > now + TIME_TOL:
                break
            self._activate(fi)
            self._pending_pos += 1

        act = np.flatnonzero(self.f_status == 1)
        if act.size == 0:
            self.clock.advance()
            return
        rate = self.f_rate[act]
        burst = self.f_burst[act]
        rem = self.f_rem[act]
        drain = rem / dt
        fdemand = np.where(burst, np.minimum(rate, drain), rate)
        sess = self.f_sess[act]
        uniq, pos, sdem, salloc, falloc = self._session_alloc(fdemand, sess)

        # bursts capped by their remaining bytes finish inside this tick; the
        # allocation with those caps lifted gives the rates before completion
        finishing = burst & (drain < rate)
        ref = falloc
        spre = salloc
        if finishing.any():
            probe = np.where(finishing, rate, fdemand)
            _, _, _, spre, fprobe = self._session_alloc(probe, sess)
            ref = np.where(finishing, fprobe, falloc)

        delivered = falloc * dt
        left = np.where(burst, rem - delivered, 0.0)
        done = burst & (left <= DONE_TOL * self.f_size[act] + DONE_TOL)
        split = dt
        if done.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                offset = np.where(ref > 0, rem / ref, dt)
            offset = np.minimum(offset, dt)
            split = float(offset[done].min())
            delivered = np.where(done, rem, delivered)
            left = np.where(done, 0.0, left)
            idx = act[done]
            self.f_done_at[idx] = now + offset[done]
            self.f_status[idx] = 2
            for fi in idx:
                self.control.release_flow(self.flows[fi].ue_id, self.flows[fi].flow_id)
                log.info("flow %s completed at t=%.4f s", self.flows[fi].flow_id, self.f_done_at[fi])
        else:
            spre = salloc
        self.f_rem[act] = np.where(burst, left, self.f_rem[act])
        # size - remaining keeps completed bursts exact to the byte
        self.f_delivered[act] = np.where(burst, self.f_size[act] - left, self.f_delivered[act] + delivered)

        srem = np.zeros(len(uniq))
        nburst = np.zeros(len(uniq))
        np.add.at(srem, pos, np.where(burst, left, 0.0))
        np.add.at(nburst, pos, burst)
        srem = np.where(nburst > 0, srem * MBIT_TO_BYTES, np.nan)
        self._chunks.append((self.clock.index, uniq, sdem, salloc, srem, spre, split))
        self.clock.advance()

    # -- whole run ------------------------------------------------------------

    def finished(self) -> bool:
        if not self.flows:
            return True
        if self.clock.now >= self.clock.horizon - TIME_TOL:
            return True
        if self.f_burst.any():
            return bool((self.f_status[self.f_burst] == 2).all())
        return False

    def run(self) -> MetricsTrace:
        self.start()
        while not self.finished():
            self.step()
        return self.trace()

    def flow_states(self) -> list[FlowState]:
        out = []
        for i, f in enumerate(self.flows):
            pos = self.f_sess[i]
            out.append(FlowState(
                flow=f,
                session=self.sessions[pos] if pos >= 0 else None,
                bytes_remaining=self.f_rem[i] * MBIT_TO_BYTES if self.f_burst[i] else None,
                status=_STATUS[self.f_status[i]],
                delivered_bytes=self.f_delivered[i] * MBIT_TO_BYTES,
                completion_time=None if np.isnan(self.f_done_at[i]) else float(self.f_done_at[i]),
            ))
        return out

    def trace(self) -> MetricsTrace:
        end = self.clock.now
        names = {s.snssai: s.name for s in self.scenario.slices}
        sessions = [
            SessionInfo(s.session_id, s.ue_id, s.snssai, names.get(s.snssai), tuple(self._session_flows[k]))
            for k, s in enumerate(self.sessions)
        ]
        flows = []
        for i, f in enumerate(self.flows):
            pos = int(self.f_sess[i])
            session = self.sessions[pos] if pos >= 0 else None
            done_at = None if np.isnan(self.f_done_at[i]) else float(self.f_done_at[i])
            start = float(self.f_start[i])
            if done_at is not None:
                duration = done_at - start
            elif self.f_status[i] == 1:
                duration = end - start
            else:
                duration = None
            delivered = float(self.f_delivered[i])
            flows.append(FlowSummary(
                flow_id=f.flow_id,
                ue_id=f.ue_id,
                session_id=session.session_id if session else None,
                snssai=session.snssai if session else None,
                kind="finite_burst" if f.is_burst else "constant_rate",
                start_time_s=start,
                completion_time_s=done_at,
                duration_s=duration,
                size_bytes=f.demand_profile.size_bytes if f.is_burst else None,
                delivered_bytes=delivered * MBIT_TO_BYTES,
                mean_rate_mbps=delivered / duration if duration else 0.0,
            ))
        if self._chunks:
            sizes = [len(c[1]) for c in self._chunks]
            columns = {
                "tick_index": np.repeat(np.array([c[0] for c in self._chunks], dtype=np.int64), sizes),
                "session": np.concatenate([c[1] for c in self._chunks]),
                "demand": np.concatenate([c[2] for c in self._chunks]),
                "alloc": np.concatenate([c[3] for c in self._chunks]),
                "bytes_remaining": np.concatenate([c[4] for c in self._chunks]),
                "rate_pre": np.concatenate([c[5] for c in self._chunks]),
                "split": np.repeat(np.array([c[6] for c in self._chunks]), sizes),
            }
        else:
            columns = {
                "tick_index": np.zeros(0, dtype=np.int64),
                "session": np.zeros(0, dtype=np.int64),
                **{k: np.zeros(0) for k in ("demand", "alloc", "bytes_remaining", "rate_pre", "split")},
            }
        return MetricsTrace(self.clock.tick, end, sessions, flows, self._slice_order, columns)


def run(scenario: Scenario, tick: Optional[float] = None, seed: Optional[int] = None, kernel=None) -> MetricsTrace:
    return Engine(scenario, tick=tick, seed=seed, kernel=kernel).run()


def _overlap(a, b, t0, t1):
    return np.clip(np.minimum(b, t1) - np.maximum(a, t0), 0.0, None)


def summarize(trace: MetricsTrace, window: tuple) -> dict:
    """Mean rates over ``window = (t0, t1)``: delivered bits / window length.

    Returns ``{"window", "flows", "slices"}``. Flow entries are per session
    (listing the flows bound to it); slice entries sum their sessions.
    """
    t0, t1 = map(float, window)
    if not t0 < t1:
        raise EmptyWindow(f"window ({t0}, {t1}) is empty")
    if len(trace) == 0:
        raise EmptyWindow("trace has no rows")
    first = float(trace.tick_index[0]) * trace.tick
    if t1 <= first or t0 >= trace.end_time:
        raise EmptyWindow(f"window ({t0}, {t1}) lies outside the trace span ({first}, {trace.end_time})")
    dt = trace.tick
    start = trace.time
    mid = start + trace.split
    stop = start + dt
    rest = dt - trace.split
    with np.errstate(divide="ignore", invalid="ignore"):
        rate_post = np.where(rest > 0, (trace.alloc * dt - trace.rate_pre * trace.split) / rest, 0.0)
    bits = (trace.rate_pre * _overlap(start, mid, t0, t1)
            + rate_post * _overlap(mid, stop, t0, t1))
    per_session = np.bincount(trace.session, weights=bits, minlength=len(trace.sessions))
    length = t1 - t0
    flows = []
    for k, s in enumerate(trace.sessions):
        flows.append({
            "session_id": s.session_id,
            "flow_ids": list(s.flow_ids),
            "ue_id": s.ue_id,
            "sst": s.snssai.sst,
            "sd": s.snssai.sd,
            "delivered_bytes": float(per_session[k]) * MBIT_TO_BYTES,
            "mean_rate_mbps": float(per_session[k]) / length,
        })
    slice_of = trace.session_slice() if trace.sessions else np.zeros(0, dtype=np.int64)
    per_slice = np.bincount(slice_of, weights=per_session, minlength=len(trace.slices))
    slices = []
    for n, cfg in enumerate(trace.slices):
        members = int((slice_of == n).sum())
        slices.append({
            "name": cfg.name,
            "sst": cfg.snssai.sst,
            "sd": cfg.snssai.sd,
            "priority": cfg.priority,
            "sessions": members,
            "mean_rate_mbps": float(per_slice[n]) / length,
        })
    return {"window": [t0, t1], "flows": flows, "slices": slices}


def run_summary(trace: MetricsTrace, scenario_name: str = "", seed: int = 0) -> dict:
    """The summary.json document: per-flow results, whole-run slice means and
    one measurement window per finite burst (start to completion)."""
    doc = {
        "scenario": scenario_name,
        "tick_s": trace.tick,
        "seed": seed,
        "end_time_s": trace.end_time,
        "rows": len(trace),
        "flows": [f.to_json() for f in trace.flows],
    }
    if len(trace) and trace.end_time > 0:
        doc["slices"] = summarize(trace, (0.0, trace.end_time))["slices"]
    else:
        doc["slices"] = []
    windows = []
    for f in trace.flows:
        if f.kind == "finite_burst" and f.completion_time_s is not None and f.completion_time_s > f.start_time_s:
            s = summarize(trace, (f.start_time_s, f.completion_time_s))
            windows.append({"flow_id": f.flow_id, "window": s["window"], "slices": s["slices"]})
    doc["burst_windows"] = windows
    return doc
