"""Packet-level replay of a schedule under free-running node clocks.

Each relay holds a frame for its assigned residence time after arrival, then
hands it to the egress link, a single FIFO server ordered by release time.
A frame belongs to the slot in which its source emits it and keeps that
slot's path, link delays and hold times to the end, so frames in flight at a
slot boundary finish on the old path.
"""
from __future__ import annotations

import bisect
import csv
import heapq
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .constellation import LinkKey, TopologySnapshot
from .exceptions import InvalidParameterError, TopologyMismatchError
from .scheduler.schedule import Schedule
from .timing import NEVER, drift_collision_time

MAX_DRIFT = 1e-3
PACKET_FIELDS = ("flow_id", "seq", "emit_s", "delivered_s", "e2e_delay_s", "total_queue_wait_s")
NONTT_REMNANT_BYTES = 127


@dataclass(frozen=True)
class ClockModel:
    """Per-node clock: ``local(t) = t * (1 + drift) + offset``; unknown nodes run ideal."""

    offsets: Mapping[int, float]
    drifts: Mapping[int, float]

    def __post_init__(self):
        for node, s in self.drifts.items():
            if not abs(s) <= MAX_DRIFT:
                raise InvalidParameterError(f"drift of node {node} is {s}, |drift| must be <= {MAX_DRIFT}")

    def drift(self, node: int) -> float:
        return self.drifts.get(node, 0.0)

    def offset(self, node: int) -> float:
        return self.offsets.get(node, 0.0)

    def local(self, node: int, t: float) -> float:
        return t * (1.0 + self.drift(node)) + self.offset(node)

    def to_global(self, node: int, local: float) -> float:
        return (local - self.offset(node)) / (1.0 + self.drift(node))

    @classmethod
    def ideal(cls) -> "ClockModel":
        return cls({}, {})

    @classmethod
    def random(cls, nodes: Iterable[int], seed: int, offset_max: float = 10e-3,
               drift_max: float = 20e-6) -> "ClockModel":
        """Offsets uniform in [0, offset_max], drifts uniform in [-drift_max, drift_max]."""
        nodes = sorted(nodes)
        rng = np.random.default_rng(seed)
        off = rng.uniform(0.0, offset_max, len(nodes))
        dr = rng.uniform(-drift_max, drift_max, len(nodes))
        return cls(dict(zip(nodes, off.tolist())), dict(zip(nodes, dr.tolist())))


class PacketRecord(NamedTuple):
    flow_id: int
    sequence: int
    slot: int
    emit_time_global: float
    arrival_per_hop: Tuple[float, ...]
    delivered_time_global: float
    e2e_delay: float
    queue_wait_per_hop: Tuple[float, ...]

    @property
    def total_queue_wait(self) -> float:
        return sum(self.queue_wait_per_hop)


class SimulationResult(list):
    """List of :class:`PacketRecord` plus per-link contention bookkeeping."""

    def __init__(self, records=(), first_contention=None, phases=None):
        super().__init__(records)
        # link -> global release time of the first frame that had to wait there
        self.first_contention: Dict[LinkKey, float] = dict(first_contention or {})
        self.phases: Dict[int, float] = dict(phases or {})


@dataclass(frozen=True)
class JitterSummary:
    min: float
    max: float
    spread: float
    p50: float
    p99: float
    count: int


def _slot_lookup(snapshots: Sequence[TopologySnapshot]):
    starts = [s.sample_time for s in snapshots]
    ends = [s.sample_time + s.duration for s in snapshots]

    def slot_of(t: float) -> Optional[int]:
        i = bisect.bisect_right(starts, t) - 1
        if i < 0 or t >= ends[i]:
            return None
        return i

    return slot_of, starts[0], ends[-1]


def release_offsets(schedule: Schedule, snapshots: Sequence[TopologySnapshot], flow, slot: int) -> Dict[LinkKey, float]:
    """Contention-free time from emission until the frame is handed to each link of its path."""
    e = schedule[flow.id]
    p = e.path_per_slot[slot]
    snap = snapshots[slot]
    out = {}
    t = e.residence.get((slot, p.nodes[0]), 0.0) if len(p.nodes) == 2 else 0.0
    for i, link in enumerate(p.links):
        if i > 0:
            t += e.residence[(slot, link[0])]
        out[link] = t
        info = snap.links[link]
        t += info.prop_delay + 8.0 * flow.frame_len / info.bandwidth
    return out


def _source_phases(flows: Sequence, rng: np.random.Generator, guard: Mapping[int, float],
                   attempts: int = 200) -> Dict[int, float]:
    """Uniform initial phases; same-source flows are kept ``guard`` apart so the source emits them in turn."""
    out: Dict[int, float] = {}
    taken: Dict[int, List[float]] = {}
    for f in sorted(flows, key=lambda x: x.id):
        g = guard.get(f.src, 0.0)
        mine = taken.setdefault(f.src, [])
        phi = float(rng.uniform(0.0, f.period))
        for _ in range(attempts):
            if all(min(abs(phi - q) % f.period, f.period - abs(phi - q) % f.period) >= g for q in mine):
                break
            phi = float(rng.uniform(0.0, f.period))
        else:
            # crowded source: fall back to even spacing after the last emitted flow
            phi = (mine[-1] + g) % f.period if mine else phi
        mine.append(phi)
        out[f.id] = phi
    return out


def simulate_run(schedule: Schedule, snapshots: Sequence[TopologySnapshot], flows: Sequence,
                 clocks: Optional[ClockModel] = None, horizon: float = 1.0, seed: int = 0,
                 start: Optional[float] = None, phases: Optional[Mapping[int, float]] = None,
                 residence_in_local_time: bool = False, nontt_blocking: bool = False,
                 record_hops: bool = True) -> SimulationResult:
    """Replay ``schedule`` for ``horizon`` seconds of global time from ``start``.

    ``phases`` maps flow id to the local-clock instant, past the source's
    reading at ``start``, of its first frame; by default they are drawn from
    ``seed``. Hold times are exact intervals unless
    ``residence_in_local_time`` stretches them by the relay's drift.
    ``nontt_blocking`` adds a random wait of up to one 127 B frame per hop.
    """
    if horizon <= 0:
        raise InvalidParameterError("horizon must be positive")
    if schedule.num_slots != len(snapshots):
        raise TopologyMismatchError(f"schedule has {schedule.num_slots} slots, topology {len(snapshots)}")
    clocks = clocks or ClockModel.ideal()
    slot_of, t_first, t_last = _slot_lookup(snapshots)
    t0 = t_first if start is None else float(start)
    t_end = min(t0 + horizon, t_last)
    rng = np.random.default_rng(seed)
    by_id = {f.id: f for f in flows}
    active = [by_id[fid] for fid in schedule.scheduled_ids if fid in by_id]
    for f in active:
        for t, p in schedule[f.id].path_per_slot.items():
            if not p.valid_in(snapshots[t]):
                raise TopologyMismatchError(f"flow {f.id} path in slot {t} uses a link absent from the topology")
    c_max = 8.0 * schedule.max_frame_bytes / min((l.bandwidth for s in snapshots for l in s.links.values()),
                                                  default=1.0)
    if phases is None:
        per_src: Dict[int, int] = {}
        for f in active:
            per_src[f.src] = per_src.get(f.src, 0) + 1
        guard = {s: min(c_max, active[0].period / n) for s, n in per_src.items()} if active else {}
        phases = _source_phases(active, rng, guard)
    block_rng = np.random.default_rng([seed, 1])
    block_max = 8.0 * NONTT_REMNANT_BYTES

    # per (flow, slot): nodes, per-link (prop, tx), holds at relays (global seconds)
    plan: Dict[Tuple[int, int], tuple] = {}

    def route(f, tau):
        key = (f.id, tau)
        r = plan.get(key)
        if r is None:
            e = schedule[f.id]
            p = e.path_per_slot[tau]
            snap = snapshots[tau]
            hops = []
            for link in p.links:
                info = snap.links[link]
                hops.append((link, info.prop_delay, 8.0 * f.frame_len / info.bandwidth, info.bandwidth))
            holds = []
            for v in p.nodes[1:-1]:
                dt = e.residence[(tau, v)]
                if residence_in_local_time:
                    dt /= 1.0 + clocks.drift(v)
                holds.append(dt)
            src_hold = e.residence.get((tau, p.nodes[0]), 0.0) if len(p.nodes) == 2 else 0.0
            if residence_in_local_time:
                src_hold /= 1.0 + clocks.drift(p.nodes[0])
            r = plan[key] = (tuple(hops), tuple(holds), src_hold)
        return r

    heap: list = []
    base_local = {}
    for f in active:
        base_local[f.id] = clocks.local(f.src, t0) + phases[f.id]
        t = clocks.to_global(f.src, base_local[f.id])
        if t < t_end:
            heapq.heappush(heap, (t, 0, f.id, 0, -1))

    busy: Dict[LinkKey, float] = {}
    first: Dict[LinkKey, float] = {}
    frames: Dict[Tuple[int, int], list] = {}
    records: List[PacketRecord] = []
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        t, _, fid, seq, hop = pop(heap)
        f = by_id[fid]
        if hop < 0:
            # emission: schedule the next frame of this flow, then hand this one to its first link
            nxt = clocks.to_global(f.src, base_local[fid] + (seq + 1) * f.period)
            if nxt < t_end:
                push(heap, (nxt, 0, fid, seq + 1, -1))
            tau = slot_of(t)
            if tau is None:
                continue
            hops, holds, src_hold = route(f, tau)
            frames[(fid, seq)] = [tau, t, [], []]
            push(heap, (t + src_hold, 1, fid, seq, 0))
            continue
        st = frames[(fid, seq)]
        hops, holds, _ = route(f, st[0])
        link, prop, tx, bw = hops[hop]
        begin = busy.get(link, -np.inf)
        s = t if t >= begin else begin
        if nontt_blocking:
            s += float(block_rng.uniform(0.0, block_max / bw))
        wait = s - t
        if wait > 0 and link not in first:
            first[link] = t
        busy[link] = s + tx
        arrive = s + tx + prop
        st[2].append(arrive)
        st[3].append(wait)
        if hop + 1 == len(hops):
            del frames[(fid, seq)]
            records.append(PacketRecord(fid, seq, st[0], st[1], tuple(st[2]) if record_hops else (), arrive,
                                        arrive - st[1], tuple(st[3]) if record_hops else (sum(st[3]),)))
        else:
            push(heap, (arrive + holds[hop], 1, fid, seq, hop + 1))
    records.sort(key=lambda r: (r.flow_id, r.sequence))
    return SimulationResult(records, first, phases)


def measure_jitter(records: Iterable[PacketRecord]) -> Dict[int, JitterSummary]:
    """Per-flow min / max / spread / median / 99th percentile of end-to-end delay."""
    delays: Dict[int, List[float]] = {}
    for r in records:
        delays.setdefault(r.flow_id, []).append(r.e2e_delay)
    out = {}
    for fid in sorted(delays):
        d = np.asarray(delays[fid])
        lo, hi = float(d.min()), float(d.max())
        out[fid] = JitterSummary(lo, hi, hi - lo, float(np.percentile(d, 50)), float(np.percentile(d, 99)), len(d))
    return out


def envelope_violations(records: Iterable[PacketRecord], schedule: Schedule, eps: float = 1e-9) -> List[Tuple]:
    """Frames outside ``[d_target - eps, d_target + wcd_total(slot) + eps]``."""
    bad = []
    for r in records:
        e = schedule[r.flow_id]
        lo = e.d_target - eps
        hi = e.d_target + e.wcd_total_per_slot[r.slot] + eps
        if not lo <= r.e2e_delay <= hi:
            bad.append((r.flow_id, r.sequence, r.slot, r.e2e_delay, e.d_target, e.wcd_total_per_slot[r.slot]))
    return bad


def predict_first_collision(flow_a, flow_b, shared_link: LinkKey, clocks: ClockModel,
                            initial_phases: Mapping[int, float], schedule: Optional[Schedule] = None,
                            slot: int = 0, bandwidth: float = 100e6) -> Union[float, str]:
    """Global time of the first release at ``shared_link`` that finds the other flow's frame in service.

    ``initial_phases`` gives, per flow id, the global release time of the
    flow's first frame at the link. The flow whose source clock runs faster
    closes in on the other; contention starts once its lead-in gap drops below
    one frame time. Returns :data:`NEVER` when neither flow gains on the other.
    """
    if schedule is not None:
        for f in (flow_a, flow_b):
            if shared_link not in schedule[f.id].path_per_slot[slot].link_set:
                raise InvalidParameterError(f"flow {f.id} does not use link {shared_link} in slot {slot}")
    if flow_a.period != flow_b.period:
        raise InvalidParameterError("closed form assumes equal nominal periods")
    a, b = (flow_a, flow_b) if clocks.drift(flow_a.src) >= clocks.drift(flow_b.src) else (flow_b, flow_a)
    s_fast, s_slow = clocks.drift(a.src), clocks.drift(b.src)
    p_fast = a.period / (1.0 + s_fast)
    p_slow = b.period / (1.0 + s_slow)
    c_fast = 8.0 * a.frame_len / bandwidth
    c_slow = 8.0 * b.frame_len / bandwidth
    r_fast, r_slow = float(initial_phases[a.id]), float(initial_phases[b.id])
    if r_fast < r_slow:
        j = int(np.ceil((r_slow - r_fast) / p_fast))
        if r_slow - (r_fast + (j - 1) * p_fast) < c_fast:
            return r_slow  # the first slow frame finds a fast frame in service
        r_fast += j * p_fast
    gap = (r_fast - r_slow) % p_slow  # lead of the preceding slow frame
    if gap < c_slow:
        return r_fast
    if p_slow - gap < c_fast:
        return r_fast - gap + p_slow
    # the gap shrinks by (p_slow - p_fast) per fast period
    wait = drift_collision_time(gap, c_slow, (s_fast - s_slow) / (1.0 + s_slow))
    if wait == NEVER:
        return NEVER
    return r_fast + wait


def save_packets(path, records: Iterable[PacketRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PACKET_FIELDS)
        for r in records:
            w.writerow([r.flow_id, r.sequence, repr(r.emit_time_global), repr(r.delivered_time_global),
                        repr(r.e2e_delay), repr(r.total_queue_wait)])


def load_packets(path) -> List[dict]:
    with open(path, newline="") as fh:
        return [{"flow_id": int(r["flow_id"]), "seq": int(r["seq"]), "emit_s": float(r["emit_s"]),
                 "delivered_s": float(r["delivered_s"]), "e2e_delay_s": float(r["e2e_delay_s"]),
                 "total_queue_wait_s": float(r["total_queue_wait_s"])} for r in csv.DictReader(fh)]
