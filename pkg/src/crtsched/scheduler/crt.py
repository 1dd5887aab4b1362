"""CRT-Fast: per slot, superimpose edge-disjoint layers of flows until none fits."""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constellation import TopologySnapshot
from ..kpaths import CandidateSet, Path
from .engine import ScheduleRun, SlotContext
from .schedule import Schedule, SchedulerConfig


def check_global_feasibility(flow, path: Path, ctx: SlotContext) -> bool:
    """Would inserting ``path`` for ``flow`` keep it and every committed flow feasible?

    Leaves ``ctx`` untouched.
    """
    return ctx.check(flow, path)


class _LayerIndex:
    """Link ids of every candidate of the slot's flows, laid out flat for numpy reductions."""

    def __init__(self, ctx: SlotContext, fids: Sequence[int], cands: Dict[int, List[Path]]):
        link_id: Dict = {}
        self.fids = list(fids)
        self.pos = {fid: i for i, fid in enumerate(self.fids)}
        links: List[int] = []
        cand_start: List[int] = []
        flow_start: List[int] = []
        entry_flow: List[int] = []
        cache: Dict[Tuple[int, ...], List[int]] = {}
        for i, fid in enumerate(self.fids):
            flow_start.append(len(cand_start))
            for p in cands[fid]:
                ids = cache.get(p.nodes)
                if ids is None:
                    ids = cache[p.nodes] = [link_id.setdefault(e, len(link_id)) for e in p.links]
                cand_start.append(len(links))
                links.extend(ids)
                entry_flow.extend([i] * len(ids))
        self.num_links = max(len(link_id), 1)
        self.links = np.asarray(links, dtype=np.int64)
        self.cand_start = np.asarray(cand_start, dtype=np.int64)
        self.flow_start = np.asarray(flow_start, dtype=np.int64)
        self.entry_flow = np.asarray(entry_flow, dtype=np.int64)
        self.ncand = np.diff(np.append(self.flow_start, len(cand_start)))
        cand_flow = np.repeat(np.arange(len(self.fids)), self.ncand)
        self.local_idx = np.arange(len(cand_start)) - self.flow_start[cand_flow]
        self.cand_flow = cand_flow
        self.src = np.asarray([ctx.flows[fid].src for fid in self.fids], dtype=np.int64)

    def conflict_degrees(self, alive: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(cd, index of p*) for every flow; link popularity counts each source once."""
        mask = alive[self.entry_flow]
        keys = self.src[self.entry_flow[mask]] * self.num_links + self.links[mask]
        counts = np.bincount(np.unique(keys) % self.num_links, minlength=self.num_links)
        pc = np.add.reduceat(counts[self.links] - 1, self.cand_start)
        cd = np.minimum.reduceat(pc, self.flow_start)
        first = np.where(pc == cd[self.cand_flow], self.local_idx, np.iinfo(np.int64).max)
        star = np.minimum.reduceat(first, self.flow_start)
        return cd, star


def find_max_feasible_layer(unscheduled: Sequence[int], ctx: SlotContext, prev_paths: Dict[int, Optional[Path]],
                            candidates: Dict[int, List[Path]], index: Optional[_LayerIndex] = None,
                            rejected: Optional[Dict[int, set]] = None) -> List[Tuple[int, Path]]:
    """Greedy edge-disjoint layer over ``unscheduled`` flows, committed into ``ctx`` as it grows.

    Flows go in ascending conflict degree (ties: earlier deadline, then id).
    Each tries its previous-slot path, then its least-conflicted candidate,
    then the other candidates in order.
    """
    if not unscheduled:
        return []
    if index is None:
        index = _LayerIndex(ctx, unscheduled, candidates)
    if rejected is None:
        rejected = {}
    alive = np.zeros(len(index.fids), dtype=bool)
    rows = np.asarray([index.pos[fid] for fid in unscheduled], dtype=np.int64)
    alive[rows] = True
    cd, star = index.conflict_degrees(alive)
    flows = ctx.flows
    deadlines = np.asarray([flows[fid].deadline for fid in unscheduled])
    ids = np.asarray(unscheduled, dtype=np.int64)
    order = np.lexsort((ids, deadlines, cd[rows]))
    layer: List[Tuple[int, Path]] = []
    used = set()
    for k in order:
        fid = int(ids[k])
        flow = flows[fid]
        cands = candidates[fid]
        dead = rejected.setdefault(fid, set())
        tries = []
        prev = prev_paths.get(fid)
        if prev is not None and prev.nodes not in dead:
            if not used.isdisjoint(prev.link_set):
                # keep the old path for a later layer rather than switching now
                continue
            tries.append(prev)
        s = int(star[rows[k]])
        tries.append(cands[s])
        tries.extend(p for i, p in enumerate(cands) if i != s)
        for p in tries:
            if p.nodes in dead or not used.isdisjoint(p.link_set):
                continue
            if ctx.check(flow, p):
                ctx.commit(flow, p)
                used.update(p.link_set)
                layer.append((fid, p))
                break
            dead.add(p.nodes)
    return layer


def crt_fast(snapshots: Sequence[TopologySnapshot], flows: Sequence, candidates: CandidateSet,
             config: Optional[SchedulerConfig] = None) -> Schedule:
    """Collision-tolerant scheduling by iterative layering with path continuity."""
    config = config or SchedulerConfig()
    run = ScheduleRun("crt_fast", snapshots, flows, candidates, config)
    prev: Dict[int, Optional[Path]] = {}
    for tau in range(len(run.snapshots)):
        ctx = run.open_slot(tau)
        cands = {fid: run.candidates_for(fid, tau) for fid in run.alive}
        pending = [fid for fid in run.alive if cands[fid]]
        prev_here = {}
        if config.enable_path_continuity:
            for fid in pending:
                p = ctx.path_in_slot(prev.get(fid))
                if p is not None:
                    prev_here[fid] = p
        index = _LayerIndex(ctx, pending, cands)
        rejected: Dict[int, set] = {}
        while pending:
            if config.layer_cap is not None and len(run.layers[tau]) >= config.layer_cap:
                break
            layer = find_max_feasible_layer(pending, ctx, prev_here, cands, index, rejected)
            if not layer:
                break
            run.layers[tau].append(sorted(fid for fid, _ in layer))
            placed = {fid for fid, _ in layer}
            pending = [fid for fid in pending if fid not in placed]
        run.close_slot(ctx)
        prev = {fid: run.paths[fid][tau] for fid in run.alive}
    return run.finish()
