"""Admission state shared by CRT-Fast and the baselines.

Slots are scheduled in order. While slot ``tau`` is open, every flow that is
still alive keeps three cross-slot summaries of its committed slots:

* ``run``  the largest fixed path delay so far (the running common target),
* ``cap``  the largest target its earlier paths can absorb within the buffer bound,
* ``wcd``  the largest collision bound it carries in any earlier slot.

A candidate path is admissible when the running target plus the worst
collision bound still meets the deadline, the buffer cap holds, link rates
fit, and every committed flow whose collision bound grows keeps a
non-negative margin. All of these only get harder as a slot fills up, so a
rejected (flow, path) pair stays rejected for the rest of the slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..constellation import LinkKey, TopologySnapshot
from ..kpaths import CandidateSet, Path
from ..timing import LinkLoadState, NodeParams
from .schedule import Schedule, ScheduleEntry, SchedulerConfig

EPS = 1e-12


@dataclass
class ResidenceResult:
    feasible: bool
    d_target: float = 0.0
    residence: Dict[Tuple[int, int], float] = field(default_factory=dict)
    wcd_per_slot: Dict[int, float] = field(default_factory=dict)
    d_fixed_per_slot: Dict[int, float] = field(default_factory=dict)
    reason: str = ""


def fixed_delay(frame_len: int, path: Path, snapshot: TopologySnapshot, d_proc: float) -> float:
    links = snapshot.links
    total = 0.0
    for e in path.links:
        info = links[e]
        total += info.prop_delay + 8.0 * frame_len / info.bandwidth
    return total + d_proc * (len(path.nodes) - 2)


def buffer_cap(d_fixed: float, path: Path, node_params: NodeParams) -> float:
    """Largest common target the path can absorb without a hop exceeding the buffer bound."""
    relays = len(path.nodes) - 2
    if relays == 0:
        return d_fixed + node_params.t_buffer_max
    return d_fixed + relays * (node_params.t_buffer_max - node_params.d_proc)


def path_collision_bound(path: Path, slot: int, load: LinkLoadState, snapshot: TopologySnapshot,
                         max_frame: int) -> float:
    links = snapshot.links
    return sum(max(load.overlap(slot, e) - 1, 0) * 8.0 * max_frame / links[e].bandwidth for e in path.links)


def allocate_residence(flow, paths_per_slot: Dict[int, Path], snapshots: Sequence[TopologySnapshot],
                       load: LinkLoadState, node_params: NodeParams, max_frame: int) -> ResidenceResult:
    """Common target over all slots and the per-hop hold times that realise it.

    Slack of a slot is spread evenly over the path's relay nodes. A single-hop
    path has no relay, so its slack is held at the source before transmission.
    """
    if not paths_per_slot:
        return ResidenceResult(False, reason="no path")
    d_fixed = {t: fixed_delay(flow.frame_len, p, snapshots[t], node_params.d_proc) for t, p in paths_per_slot.items()}
    wcd = {t: path_collision_bound(p, t, load, snapshots[t], max_frame) for t, p in paths_per_slot.items()}
    target = max(d_fixed.values())
    out = ResidenceResult(True, target, {}, wcd, d_fixed)
    for t in sorted(paths_per_slot):
        if target + wcd[t] > flow.deadline + EPS:
            return ResidenceResult(False, target, {}, wcd, d_fixed, reason=f"deadline margin exceeded in slot {t}")
        p = paths_per_slot[t]
        slack = target - d_fixed[t]
        relays = p.nodes[1:-1]
        if relays:
            dt = node_params.d_proc + slack / len(relays)
            if dt > node_params.t_buffer_max + EPS:
                return ResidenceResult(False, target, {}, wcd, d_fixed, reason=f"buffer bound exceeded in slot {t}")
            for v in relays:
                out.residence[(t, v)] = dt
        else:
            if slack > node_params.t_buffer_max + EPS:
                return ResidenceResult(False, target, {}, wcd, d_fixed, reason=f"buffer bound exceeded in slot {t}")
            out.residence[(t, p.nodes[0])] = slack
    return out


@dataclass
class _History:
    run: float = 0.0
    cap: float = float("inf")
    wcd: float = 0.0


class SlotContext:
    """Mutable admission state of one slot."""

    def __init__(self, slot: int, snapshot: TopologySnapshot, flows: Dict[int, object], node_params: NodeParams,
                 max_frame: int, load: LinkLoadState, history: Dict[int, _History]):
        self.slot = slot
        self.snapshot = snapshot
        self.flows = flows
        self.node_params = node_params
        self.max_frame = max_frame
        self.load = load
        self.history = history
        self._table = load._src[slot]
        self.flows_on: Dict[LinkKey, List[int]] = {}
        self.rate_on: Dict[LinkKey, float] = {}
        self.path: Dict[int, Path] = {}
        self.run: Dict[int, float] = {}
        self.wcd: Dict[int, float] = {}
        self._cmax: Dict[LinkKey, float] = {}
        self._terms: Dict[Tuple[Tuple[int, ...], int], Tuple[float, float]] = {}

    def cmax(self, e: LinkKey) -> float:
        c = self._cmax.get(e)
        if c is None:
            c = self._cmax[e] = 8.0 * self.max_frame / self.snapshot.links[e].bandwidth
        return c

    def terms(self, flow, path: Path) -> Tuple[float, float]:
        key = (path.nodes, flow.frame_len)
        t = self._terms.get(key)
        if t is None:
            d = fixed_delay(flow.frame_len, path, self.snapshot, self.node_params.d_proc)
            t = self._terms[key] = (d, buffer_cap(d, path, self.node_params))
        return t

    def overlap(self, e: LinkKey) -> int:
        s = self._table.get(e)
        return len(s) if s else 0

    def check(self, flow, path: Path) -> bool:
        """True when committing ``path`` for ``flow`` keeps every admitted flow feasible."""
        hist = self.history[flow.id]
        d_fixed, cap = self.terms(flow, path)
        run = max(hist.run, d_fixed)
        if run > min(hist.cap, cap) + EPS or run + hist.wcd > flow.deadline + EPS:
            return False
        src = flow.src
        rate = flow.rate
        table = self._table
        links = self.snapshot.links
        wcd = 0.0
        grown = []
        for e in path.links:
            if self.rate_on.get(e, 0.0) + rate > links[e].bandwidth * (1 + EPS):
                return False
            s = table.get(e)
            n = len(s) if s else 0
            if not s or src not in s:
                grown.append(e)
                n += 1
            if n > 1:
                wcd += (n - 1) * self.cmax(e)
        if run + wcd > flow.deadline + EPS:
            return False
        if grown:
            extra: Dict[int, float] = {}
            for e in grown:
                c = self.cmax(e)
                for j in self.flows_on.get(e, ()):
                    extra[j] = extra.get(j, 0.0) + c
            for j, x in extra.items():
                if self.run[j] + self.wcd[j] + x > self.flows[j].deadline + EPS:
                    return False
        return True

    def commit(self, flow, path: Path) -> None:
        fid = flow.id
        d_fixed, _ = self.terms(flow, path)
        grown = self.load.add(self.slot, path.links, flow.src)
        for e in grown:
            c = self.cmax(e)
            for j in self.flows_on.get(e, ()):
                self.wcd[j] += c
        wcd = 0.0
        for e in path.links:
            self.flows_on.setdefault(e, []).append(fid)
            self.rate_on[e] = self.rate_on.get(e, 0.0) + flow.rate
            n = self.overlap(e)
            if n > 1:
                wcd += (n - 1) * self.cmax(e)
        self.path[fid] = path
        self.run[fid] = max(self.history[fid].run, d_fixed)
        self.wcd[fid] = wcd

    def path_in_slot(self, path: Optional[Path]) -> Optional[Path]:
        """``path`` re-timed on this slot's snapshot, or None if one of its links is gone."""
        if path is None or not path.valid_in(self.snapshot):
            return None
        return Path.from_nodes(self.snapshot, path.nodes)


class ScheduleRun:
    """Drives slot-by-slot admission and the final residence allocation."""

    def __init__(self, algorithm: str, snapshots: Sequence[TopologySnapshot], flows: Sequence,
                 candidates: CandidateSet, config: SchedulerConfig):
        self.algorithm = algorithm
        self.snapshots = list(snapshots)
        self.flows = {f.id: f for f in flows}
        if len(self.flows) != len(flows):
            raise ValueError("flow ids must be unique")
        self.order = sorted(self.flows)
        self.candidates = candidates
        self.config = config
        self.max_frame = config.max_frame_bytes or max((f.frame_len for f in flows), default=1)
        self.load = LinkLoadState(len(self.snapshots))
        self.history = {fid: _History() for fid in self.order}
        self.paths: Dict[int, Dict[int, Path]] = {fid: {} for fid in self.order}
        self.lost: Dict[int, int] = {}
        self.layers: List[List[List[int]]] = [[] for _ in self.snapshots]
        self.alive = list(self.order)

    def open_slot(self, slot: int) -> SlotContext:
        return SlotContext(slot, self.snapshots[slot], self.flows, self.config.node_params, self.max_frame,
                           self.load, self.history)

    def close_slot(self, ctx: SlotContext) -> None:
        """Fold the slot into the cross-slot summaries; flows left without a path are dropped."""
        kept = []
        for fid in self.alive:
            p = ctx.path.get(fid)
            if p is None:
                self.lost[fid] = ctx.slot
                f = self.flows[fid]
                for t, q in self.paths[fid].items():
                    self.load.remove(t, q.links, f.src)
                continue
            h = self.history[fid]
            _, cap = ctx.terms(self.flows[fid], p)
            h.run = ctx.run[fid]
            h.cap = min(h.cap, cap)
            h.wcd = max(h.wcd, ctx.wcd[fid])
            self.paths[fid][ctx.slot] = p
            kept.append(fid)
        self.alive = kept

    def candidates_for(self, fid: int, slot: int) -> List[Path]:
        return self.candidates[(fid, slot)][: self.config.k]

    def finish(self) -> Schedule:
        entries: Dict[int, ScheduleEntry] = {}
        for fid in self.order:
            paths = self.paths[fid]
            if fid in self.lost:
                entries[fid] = ScheduleEntry(fid, False, dict(paths), lost_at_slot=self.lost[fid],
                                             reason=f"no admissible path in slot {self.lost[fid]}")
        # a post-processing failure releases load, which can only help the flows after it
        survivors = [fid for fid in self.order if fid not in self.lost]
        while True:
            failed = []
            results = {}
            for fid in survivors:
                res = allocate_residence(self.flows[fid], self.paths[fid], self.snapshots, self.load,
                                         self.config.node_params, self.max_frame)
                if res.feasible:
                    results[fid] = res
                else:
                    failed.append((fid, res.reason))
            if not failed:
                break
            for fid, reason in failed:
                f = self.flows[fid]
                for t, q in self.paths[fid].items():
                    self.load.remove(t, q.links, f.src)
                entries[fid] = ScheduleEntry(fid, False, dict(self.paths[fid]), reason=reason)
            dropped = {fid for fid, _ in failed}
            survivors = [fid for fid in survivors if fid not in dropped]
        for fid in survivors:
            res = results[fid]
            entries[fid] = ScheduleEntry(fid, True, dict(self.paths[fid]), res.d_target, res.residence,
                                         res.wcd_per_slot)
        return Schedule(self.algorithm, len(self.snapshots), self.config.node_params, self.max_frame,
                        entries, self.load, self.layers)
