"""Hand-built and small random scheduling instances (tests, oracle comparisons, examples)."""
from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .constellation import Link, LinkKey, TopologySnapshot
from .kpaths import CandidateSet, candidate_sets
from .traffic import TtFlow, shortest_prop_delays


def snapshot_from_edges(delays: Mapping[LinkKey, float], bandwidth: float = 100e6, slot: int = 0,
                        duration: float = 10.0, symmetric: bool = True,
                        nodes: Optional[Sequence[int]] = None) -> TopologySnapshot:
    """Snapshot over the given links (delays in seconds); ``symmetric`` adds each reverse link."""
    links: Dict[LinkKey, Link] = {}
    for (u, v), d in delays.items():
        links[(u, v)] = Link(float(d), float(bandwidth))
        if symmetric:
            links.setdefault((v, u), Link(float(d), float(bandwidth)))
    ids = set(nodes or ())
    for u, v in links:
        ids.update((u, v))
    return TopologySnapshot(slot, duration, slot * duration, tuple(sorted(ids)), links)


def random_small_instance(seed: int, max_nodes: int = 12, max_flows: int = 6, max_slots: int = 2,
                          max_k: int = 3, bandwidth: float = 10e6
                          ) -> Tuple[List[TopologySnapshot], List[TtFlow], CandidateSet, int]:
    """A connected random graph, 1..max_slots slots, 1..max_flows flows with tight-ish deadlines.

    The low default bandwidth makes one 1500 B frame cost 1.2 ms, so collision
    bounds compete with the deadlines. Returns (snapshots, flows, candidates, k).
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, max_nodes + 1))
    perm = rng.permutation(n)
    edges = {}
    for i in range(1, n):  # random spanning tree keeps the graph connected
        u, v = int(perm[i]), int(perm[rng.integers(0, i)])
        edges[(min(u, v), max(u, v))] = float(rng.uniform(1e-3, 5e-3))
    for _ in range(int(rng.integers(n // 2, n + 1))):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        edges.setdefault((min(u, v), max(u, v)), float(rng.uniform(1e-3, 5e-3)))
    m = int(rng.integers(1, max_slots + 1))
    snaps = []
    for t in range(m):
        scale = {e: (1.0 if t == 0 else float(rng.uniform(0.8, 1.2))) for e in edges}
        snaps.append(snapshot_from_edges({e: d * scale[e] for e, d in edges.items()}, bandwidth, slot=t,
                                         nodes=range(n)))
    k = int(rng.integers(1, max_k + 1))
    nf = int(rng.integers(1, max_flows + 1))
    dist = shortest_prop_delays(snaps[0], list(range(n)))
    c = 1500 * 8.0 / bandwidth
    flows = []
    for fid in range(nf):
        s, d = (int(x) for x in rng.choice(n, 2, replace=False))
        d_phy = float(dist[s, d])
        # room for the relays' processing plus a handful of collisions
        deadline = 1.3 * d_phy + 4e-3 + float(rng.uniform(0, 4)) * c
        flows.append(TtFlow(fid, 0.010, 1500, s, d, deadline))
    return snaps, flows, candidate_sets(snaps, flows, k), k
