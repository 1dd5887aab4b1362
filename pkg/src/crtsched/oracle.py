"""Ground truth for tiny instances and an independent schedule verifier.

Nothing here reuses the scheduler's admission code: overlap degrees, link
rates, targets and hold times are recomputed from the raw schedule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .constellation import TopologySnapshot
from .exceptions import InstanceTooLargeError
from .kpaths import CandidateSet, Path
from .scheduler.schedule import Schedule, ScheduleEntry
from .timing import LinkLoadState, NodeParams

TOL = 1e-9
MAX_FLOWS = 6
MAX_K = 3
MAX_SLOTS = 2


@dataclass(frozen=True)
class Violation:
    kind: str  # path | bandwidth | residence | buffer | min_residence | eq10 | deadline | wcd
    flow_id: Optional[int]
    slot: Optional[int]
    where: object
    detail: str

    def __str__(self):
        ctx = []
        if self.flow_id is not None:
            ctx.append(f"flow {self.flow_id}")
        if self.slot is not None:
            ctx.append(f"slot {self.slot}")
        if self.where is not None:
            ctx.append(f"at {self.where}")
        return f"[{self.kind}] {', '.join(ctx)}: {self.detail}"


@dataclass
class OracleResult:
    j1_star: int
    j2_star: int
    witness: Schedule


def _tx(frame_len: int, bandwidth: float) -> float:
    return frame_len * 8.0 / bandwidth


def _sources_per_link(schedule: Schedule, flows: Dict[int, object]) -> List[Dict[Tuple[int, int], set]]:
    out: List[Dict[Tuple[int, int], set]] = [dict() for _ in range(schedule.num_slots)]
    for e in schedule.entries.values():
        if not e.scheduled:
            continue
        src = flows[e.flow_id].src
        for t, p in e.path_per_slot.items():
            if 0 <= t < schedule.num_slots:
                for i in range(len(p.nodes) - 1):
                    out[t].setdefault((p.nodes[i], p.nodes[i + 1]), set()).add(src)
    return out


def verify_schedule(schedule: Schedule, snapshots: Sequence[TopologySnapshot], flows: Sequence,
                    node_params: Optional[NodeParams] = None) -> List[Violation]:
    """Every constraint breach of ``schedule``; an empty list means it is valid."""
    np_ = node_params or schedule.node_params
    by_id = {f.id: f for f in flows}
    out: List[Violation] = []
    m = len(snapshots)
    if schedule.num_slots != m:
        return [Violation("path", None, None, None, f"schedule spans {schedule.num_slots} slots, topology {m}")]
    biggest = max((f.frame_len for f in flows), default=0)
    if schedule.max_frame_bytes < biggest:
        out.append(Violation("wcd", None, None, None,
                             f"C_max frame {schedule.max_frame_bytes} B is below the largest frame {biggest} B"))
    c_frame = max(schedule.max_frame_bytes, biggest)
    valid: Dict[int, bool] = {}
    for e in schedule.entries.values():
        if not e.scheduled:
            continue
        f = by_id.get(e.flow_id)
        ok = True
        if f is None:
            out.append(Violation("path", e.flow_id, None, None, "scheduled flow is not in the flow set"))
            valid[e.flow_id] = False
            continue
        if sorted(e.path_per_slot) != list(range(m)):
            out.append(Violation("path", f.id, None, None,
                                 f"needs exactly one path in each of {m} slots, has slots {sorted(e.path_per_slot)}"))
            ok = False
        for t, p in sorted(e.path_per_slot.items()):
            if not 0 <= t < m:
                continue
            nodes = p.nodes
            if len(nodes) < 2 or nodes[0] != f.src or nodes[-1] != f.dst:
                out.append(Violation("path", f.id, t, None, f"path {list(nodes)} does not join {f.src}->{f.dst}"))
                ok = False
            if len(set(nodes)) != len(nodes):
                out.append(Violation("path", f.id, t, None, f"path {list(nodes)} repeats a node"))
                ok = False
            for u, v in zip(nodes, nodes[1:]):
                if (u, v) not in snapshots[t].links:
                    out.append(Violation("path", f.id, t, (u, v), "link absent from the slot topology"))
                    ok = False
        valid[e.flow_id] = ok

    srcs = _sources_per_link(schedule, by_id)
    for t in range(m):
        rate: Dict[Tuple[int, int], float] = {}
        for e in schedule.entries.values():
            if e.scheduled and valid.get(e.flow_id) and t in e.path_per_slot:
                f = by_id[e.flow_id]
                nodes = e.path_per_slot[t].nodes
                for link in zip(nodes, nodes[1:]):
                    rate[link] = rate.get(link, 0.0) + f.frame_len * 8.0 / f.period
        for link in sorted(rate):
            cap = snapshots[t].links[link].bandwidth
            if rate[link] > cap * (1 + TOL):
                out.append(Violation("bandwidth", None, t, link, f"{rate[link]:.6g} bps exceeds {cap:.6g} bps"))

    for e in sorted(schedule.entries.values(), key=lambda x: x.flow_id):
        if not e.scheduled or not valid.get(e.flow_id):
            continue
        f = by_id[e.flow_id]
        if e.d_target is None:
            out.append(Violation("eq10", f.id, None, None, "no target delay"))
            continue
        for t in range(m):
            snap = snapshots[t]
            nodes = e.path_per_slot[t].nodes
            relays = nodes[1:-1]
            held = {v: dt for (tt, v), dt in e.residence.items() if tt == t}
            expected = set(relays) if relays else {nodes[0]}
            if set(held) != expected:
                out.append(Violation("residence", f.id, t, None,
                                     f"hold times given at {sorted(held)}, expected at {sorted(expected)}"))
                continue
            for v in sorted(held):
                dt = held[v]
                floor = np_.d_proc if relays else 0.0
                if dt < floor - TOL:
                    out.append(Violation("min_residence", f.id, t, v, f"hold {dt:.9g} s below {floor:.9g} s"))
                if dt > np_.t_buffer_max + TOL:
                    out.append(Violation("buffer", f.id, t, v, f"hold {dt:.9g} s above {np_.t_buffer_max:.9g} s"))
            links = list(zip(nodes, nodes[1:]))
            total = sum(snap.links[x].prop_delay + _tx(f.frame_len, snap.links[x].bandwidth) for x in links)
            total += sum(held.values())
            if abs(total - e.d_target) > TOL:
                out.append(Violation("eq10", f.id, t, None,
                                     f"link delays plus holds = {total:.12g} s, target {e.d_target:.12g} s"))
            wcd = sum((len(srcs[t][x]) - 1) * _tx(c_frame, snap.links[x].bandwidth) for x in links)
            if e.d_target + wcd > f.deadline + TOL:
                out.append(Violation("deadline", f.id, t, None,
                                     f"target {e.d_target:.9g} s + collision bound {wcd:.9g} s > deadline {f.deadline:.9g} s"))
            rec = e.wcd_total_per_slot.get(t)
            if rec is None or abs(rec - wcd) > TOL:
                out.append(Violation("wcd", f.id, t, None, f"recorded collision bound {rec}, recomputed {wcd:.12g}"))
    return out


class _Instance:
    """Independent feasibility arithmetic for the exhaustive search."""

    def __init__(self, snapshots, flows, candidates, node_params, max_frame):
        self.snaps = snapshots
        self.flows = flows
        self.np = node_params
        self.max_frame = max_frame
        self.m = len(snapshots)
        # slot t may use any slot-t candidate or keep the slot t-1 path if it still exists
        self.options: List[List[Tuple[Path, ...]]] = []
        for f in flows:
            seqs: List[Tuple[Path, ...]] = [()]
            for t in range(self.m):
                cands = list(candidates[(f.id, t)])
                grown = []
                for seq in seqs:
                    choices = list(cands)
                    if seq and seq[-1].valid_in(snapshots[t]) and seq[-1] not in choices:
                        choices.append(Path.from_nodes(snapshots[t], seq[-1].nodes))
                    grown.extend(seq + (p,) for p in choices)
                seqs = grown
            self.options.append(seqs)

    def fixed(self, f, p: Path, t: int) -> float:
        snap = self.snaps[t]
        return (sum(snap.links[x].prop_delay + _tx(f.frame_len, snap.links[x].bandwidth) for x in p.links)
                + self.np.d_proc * (len(p.nodes) - 2))

    def feasible(self, chosen: Dict[int, Tuple[Path, ...]]) -> bool:
        srcs = [dict() for _ in range(self.m)]
        rate = [dict() for _ in range(self.m)]
        for i, paths in chosen.items():
            f = self.flows[i]
            for t, p in enumerate(paths):
                for x in p.links:
                    srcs[t].setdefault(x, set()).add(f.src)
                    rate[t][x] = rate[t].get(x, 0.0) + f.frame_len * 8.0 / f.period
        for t in range(self.m):
            for x, r in rate[t].items():
                if r > self.snaps[t].links[x].bandwidth * (1 + TOL):
                    return False
        for i, paths in chosen.items():
            f = self.flows[i]
            fixed = [self.fixed(f, p, t) for t, p in enumerate(paths)]
            target = max(fixed)
            for t, p in enumerate(paths):
                wcd = sum((len(srcs[t][x]) - 1) * _tx(self.max_frame, self.snaps[t].links[x].bandwidth)
                          for x in p.links)
                if target + wcd > f.deadline + TOL:
                    return False
                slack = target - fixed[t]
                relays = len(p.nodes) - 2
                hold = self.np.d_proc + slack / relays if relays else slack
                if hold > self.np.t_buffer_max + TOL:
                    return False
        return True

    def max_overlap(self, chosen) -> int:
        srcs = [dict() for _ in range(self.m)]
        for i, paths in chosen.items():
            for t, p in enumerate(paths):
                for x in p.links:
                    srcs[t].setdefault(x, set()).add(self.flows[i].src)
        return max((len(s) for d in srcs for s in d.values()), default=0)

    def witness(self, chosen) -> Schedule:
        load = LinkLoadState(self.m)
        for i, paths in chosen.items():
            for t, p in enumerate(paths):
                load.add(t, p.links, self.flows[i].src)
        entries = {}
        for i, f in enumerate(self.flows):
            if i not in chosen:
                entries[f.id] = ScheduleEntry(f.id, False)
                continue
            paths = chosen[i]
            fixed = [self.fixed(f, p, t) for t, p in enumerate(paths)]
            target = max(fixed)
            res, wcd = {}, {}
            for t, p in enumerate(paths):
                relays = p.nodes[1:-1]
                slack = target - fixed[t]
                if relays:
                    for v in relays:
                        res[(t, v)] = self.np.d_proc + slack / len(relays)
                else:
                    res[(t, p.nodes[0])] = slack
                wcd[t] = sum((load.overlap(t, x) - 1) * _tx(self.max_frame, self.snaps[t].links[x].bandwidth)
                             for x in p.links)
            entries[f.id] = ScheduleEntry(f.id, True, dict(enumerate(paths)), target, res, wcd)
        return Schedule("oracle", self.m, self.np, self.max_frame, entries, load)


def exact_lex_solve(snapshots: Sequence[TopologySnapshot], flows: Sequence, candidates: CandidateSet,
                    node_params: Optional[NodeParams] = None, max_frame_bytes: Optional[int] = None) -> OracleResult:
    """Most flows schedulable, then the least maximum overlap, by exhaustive branch and bound.

    Refuses instances above 6 flows, 3 candidates per (flow, slot) or 2 slots.
    """
    flows = list(flows)
    if len(flows) > MAX_FLOWS or len(snapshots) > MAX_SLOTS:
        raise InstanceTooLargeError(f"oracle handles <= {MAX_FLOWS} flows and <= {MAX_SLOTS} slots, "
                                    f"got {len(flows)} flows and {len(snapshots)} slots")
    for f in flows:
        for t in range(len(snapshots)):
            if len(candidates[(f.id, t)]) > MAX_K:
                raise InstanceTooLargeError(f"oracle handles K <= {MAX_K}, flow {f.id} has "
                                            f"{len(candidates[(f.id, t)])} candidates in slot {t}")
    node_params = node_params or NodeParams()
    max_frame = max_frame_bytes or max((f.frame_len for f in flows), default=1)
    inst = _Instance(list(snapshots), flows, candidates, node_params, max_frame)
    n = len(flows)
    best = [0, 0, {}]  # j1, j2, assignment; the empty assignment is always valid

    def dfs(i: int, chosen: Dict[int, Tuple[Path, ...]], j2: int):
        # overlaps never shrink as flows are added, so j2 is a lower bound below this node
        bound = len(chosen) + (n - i)
        if bound < best[0] or (bound == best[0] and j2 >= best[1]):
            return
        if i == n:
            count = len(chosen)
            if count > best[0] or (count == best[0] and j2 < best[1]):
                best[0], best[1], best[2] = count, j2, dict(chosen)
            return
        for paths in inst.options[i]:
            chosen[i] = paths
            if inst.feasible(chosen):
                dfs(i + 1, chosen, inst.max_overlap(chosen))
            del chosen[i]
        dfs(i + 1, chosen, j2)

    dfs(0, {}, 0)
    return OracleResult(best[0], best[1], inst.witness(best[2]))
