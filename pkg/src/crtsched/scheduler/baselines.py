"""Reference schedulers: shortest path, least-congested (best fit) and strict non-overlap.

All three visit flows in id order in every slot, use the same admission test
as CRT-Fast, and drop a flow for good once a slot offers it no admissible path.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence

from ..constellation import TopologySnapshot
from ..kpaths import CandidateSet, Path
from .engine import ScheduleRun, SlotContext
from .schedule import Schedule, SchedulerConfig


def _sequential(name: str, snapshots, flows, candidates, config, choose: Callable) -> Schedule:
    config = config or SchedulerConfig()
    run = ScheduleRun(name, snapshots, flows, candidates, config)
    for tau in range(len(run.snapshots)):
        ctx = run.open_slot(tau)
        for fid in run.alive:
            flow = run.flows[fid]
            for p in choose(ctx, flow, run.candidates_for(fid, tau)):
                if ctx.check(flow, p):
                    ctx.commit(flow, p)
                    break
        run.close_slot(ctx)
    return run.finish()


def spf_schedule(snapshots: Sequence[TopologySnapshot], flows: Sequence, candidates: CandidateSet,
                 config: Optional[SchedulerConfig] = None) -> Schedule:
    """Each flow is pinned to its shortest candidate in every slot."""
    return _sequential("spf", snapshots, flows, candidates, config, lambda ctx, f, cands: cands[:1])


def _by_congestion(ctx: SlotContext, flow, cands: List[Path]) -> List[Path]:
    def cost(item):
        i, p = item
        return (sum(ctx.overlap(e) for e in p.links), p.weight, i)

    return [p for _, p in sorted(enumerate(cands), key=cost)]


def lag_schedule(snapshots: Sequence[TopologySnapshot], flows: Sequence, candidates: CandidateSet,
                 config: Optional[SchedulerConfig] = None) -> Schedule:
    """Best fit: the admissible candidate with the least current overlap summed over its links."""
    return _sequential("lag", snapshots, flows, candidates, config, _by_congestion)


def _exclusive(ctx: SlotContext, flow, cands: List[Path]) -> List[Path]:
    src = flow.src
    out = []
    for p in cands:
        if all(ctx.load.src_on_link(ctx.slot, e) <= {src} for e in p.links):
            out.append(p)
    return out


def strict_nonoverlap_schedule(snapshots: Sequence[TopologySnapshot], flows: Sequence, candidates: CandidateSet,
                               config: Optional[SchedulerConfig] = None) -> Schedule:
    """Only candidates whose links carry no other source are allowed (overlap degree stays 1)."""
    return _sequential("strict", snapshots, flows, candidates, config, _exclusive)
