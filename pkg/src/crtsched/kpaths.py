"""K loop-free shortest candidate paths per flow and slot (Yen's algorithm).

Path weight is the summed propagation delay. Ties are broken by the
lexicographic order of the vertex sequence, so results are reproducible.
"""
from __future__ import annotations

import heapq
import json
import os
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._spur import INF, NO_PATH, distances_to, spur_path
from .constellation import LinkKey, TopologySnapshot
from .exceptions import InvalidParameterError, TopologyMismatchError
from .validation import check_count

PS_PER_S = 1e12


def to_ps(seconds: float) -> int:
    return int(round(seconds * PS_PER_S))


class Path:
    """A simple directed path, stored as its vertex sequence."""

    __slots__ = ("nodes", "total_prop_delay", "weight", "__dict__")

    def __init__(self, nodes: Sequence[int], total_prop_delay: float, weight: Optional[int] = None):
        self.nodes = tuple(int(n) for n in nodes)
        self.total_prop_delay = float(total_prop_delay)
        self.weight = to_ps(total_prop_delay) if weight is None else int(weight)

    @classmethod
    def from_nodes(cls, snapshot: TopologySnapshot, nodes: Sequence[int]) -> "Path":
        nodes = tuple(nodes)
        try:
            delays = [snapshot.links[(u, v)].prop_delay for u, v in zip(nodes, nodes[1:])]
        except KeyError as exc:
            raise TopologyMismatchError(f"link {exc.args[0]} not in slot {snapshot.slot}") from None
        return cls(nodes, sum(delays), sum(to_ps(d) for d in delays))

    @cached_property
    def links(self) -> Tuple[LinkKey, ...]:
        n = self.nodes
        return tuple(zip(n, n[1:]))

    @cached_property
    def link_set(self) -> frozenset:
        return frozenset(self.links)

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def src(self) -> int:
        return self.nodes[0]

    @property
    def dst(self) -> int:
        return self.nodes[-1]

    @property
    def intermediate_nodes(self) -> Tuple[int, ...]:
        return self.nodes[1:-1]

    def is_simple(self) -> bool:
        return len(set(self.nodes)) == len(self.nodes)

    def valid_in(self, snapshot: TopologySnapshot) -> bool:
        links = snapshot.links
        return all(e in links for e in self.links)

    def __eq__(self, other):
        if isinstance(other, Path):
            return self.nodes == other.nodes
        return NotImplemented

    def __hash__(self):
        return hash(self.nodes)

    def __repr__(self):
        return f"Path({list(self.nodes)}, {self.total_prop_delay * 1e3:.4f} ms)"


class _Csr:
    """Forward and reverse adjacency arrays of one snapshot, with integer-ps weights."""

    def __init__(self, snapshot: TopologySnapshot):
        nodes = sorted(snapshot.nodes)
        self.index = {v: i for i, v in enumerate(nodes)}
        self.nodes = np.asarray(nodes, dtype=np.int64)
        n = len(nodes)
        edges = sorted((self.index[u], self.index[v]) for (u, v) in snapshot.links)
        m = len(edges)
        src = np.fromiter((e[0] for e in edges), dtype=np.int64, count=m)
        dst = np.fromiter((e[1] for e in edges), dtype=np.int64, count=m)
        w = np.fromiter(
            (to_ps(snapshot.links[(nodes[a], nodes[b])].prop_delay) for a, b in edges), dtype=np.int64, count=m
        )
        self.fwd_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.fwd_ptr, src + 1, 1)
        self.fwd_ptr = np.cumsum(self.fwd_ptr)
        self.fwd_dst = dst
        self.fwd_w = w
        order = np.lexsort((src, dst))
        self.rev_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.rev_ptr, dst + 1, 1)
        self.rev_ptr = np.cumsum(self.rev_ptr)
        self.rev_src = src[order]
        self.rev_eid = order.astype(np.int64)
        self.edge_id = {(nodes[a], nodes[b]): i for i, (a, b) in enumerate(edges)}
        self.node_block = np.zeros(n, dtype=np.bool_)
        self.edge_block = np.zeros(m, dtype=np.bool_)
        self._g = np.full(n, INF, dtype=np.int64)
        self._done = np.zeros(n, dtype=np.bool_)
        self._reach = np.zeros(n, dtype=np.bool_)
        self._touched = np.empty(n + 1, dtype=np.int64)
        self._hk = np.empty(m + 2, dtype=np.int64)
        self._hv = np.empty(m + 2, dtype=np.int64)
        self._h_cache: Dict[int, np.ndarray] = {}

    def dist_to(self, t: int) -> np.ndarray:
        """Unrestricted integer-ps distances from every node to ``t`` (memoised per target)."""
        h = self._h_cache.get(t)
        if h is None:
            if len(self._h_cache) > 256:
                self._h_cache.clear()
            h = np.empty(len(self.nodes), dtype=np.int64)
            distances_to(self.rev_ptr, self.rev_src, self.rev_eid, self.fwd_w, self.index[t], h, self._hk, self._hv)
            self._h_cache[t] = h
        return h

    def spur(self, s: int, t: int, h: np.ndarray):
        w, p = spur_path(self.fwd_ptr, self.fwd_dst, self.fwd_w, self.node_block, self.edge_block,
                         self.index[s], self.index[t], h, self._g, self._done, self._reach, self._touched,
                         self._hk, self._hv)
        if w == NO_PATH:
            return None, None
        return int(w), tuple(self.nodes[p].tolist())


_CSR_CACHE: Dict[int, Tuple[TopologySnapshot, _Csr]] = {}


def _csr(snapshot: TopologySnapshot) -> _Csr:
    hit = _CSR_CACHE.get(id(snapshot))
    if hit is not None and hit[0] is snapshot:
        return hit[1]
    if len(_CSR_CACHE) > 64:
        _CSR_CACHE.clear()
    g = _Csr(snapshot)
    _CSR_CACHE[id(snapshot)] = (snapshot, g)
    return g


def k_shortest_paths(snapshot: TopologySnapshot, src: int, dst: int, k: int) -> List[Path]:
    """Up to ``k`` simple ``src``→``dst`` paths in nondecreasing propagation delay.

    Returns an empty list when ``dst`` is unreachable.
    """
    check_count(k, "k", 1)
    if src == dst:
        raise InvalidParameterError("src and dst must differ")
    g = _csr(snapshot)
    if src not in g.index or dst not in g.index:
        raise TopologyMismatchError(f"node {src if src not in g.index else dst} not in slot {snapshot.slot}")
    h = g.dist_to(dst)
    if h[g.index[src]] == INF:
        return []
    w0, p0 = g.spur(src, dst, h)
    if p0 is None:
        return []
    accepted: List[Tuple[int, Tuple[int, ...]]] = [(w0, p0)]
    seen = {p0}
    heap: List[Tuple[int, Tuple[int, ...]]] = []
    links = snapshot.links
    while len(accepted) < k:
        _, last = accepted[-1]
        root_w = 0
        for i in range(len(last) - 1):
            spur_node = last[i]
            root = last[: i + 1]
            blocked_e = []
            for _, p in accepted:
                if len(p) > i + 1 and p[: i + 1] == root:
                    eid = g.edge_id[(p[i], p[i + 1])]
                    if not g.edge_block[eid]:
                        g.edge_block[eid] = True
                        blocked_e.append(eid)
            blocked_n = [g.index[v] for v in root[:-1]]
            g.node_block[blocked_n] = True
            sw, sp = g.spur(spur_node, dst, h)
            g.node_block[blocked_n] = False
            g.edge_block[blocked_e] = False
            if sp is not None:
                cand = root[:-1] + sp
                if cand not in seen:
                    seen.add(cand)
                    heapq.heappush(heap, (root_w + sw, cand))
            root_w += to_ps(links[(last[i], last[i + 1])].prop_delay)
        if not heap:
            break
        accepted.append(heapq.heappop(heap))
    out = []
    for w, nodes in accepted:
        delay = sum(links[(u, v)].prop_delay for u, v in zip(nodes, nodes[1:]))
        out.append(Path(nodes, delay, w))
    return out


class CandidateSet:
    """Candidate paths per ``(flow_id, slot)``; an empty list marks a disconnected pair."""

    def __init__(self, k: int, num_slots: int):
        self.k = k
        self.num_slots = num_slots
        self._paths: Dict[Tuple[int, int], List[Path]] = {}

    def __getitem__(self, key: Tuple[int, int]) -> List[Path]:
        return self._paths.get(key, [])

    def __setitem__(self, key: Tuple[int, int], paths: List[Path]):
        self._paths[key] = paths

    def __contains__(self, key):
        return key in self._paths

    def __len__(self):
        return len(self._paths)

    def items(self):
        return self._paths.items()

    def num_paths(self) -> int:
        return sum(len(v) for v in self._paths.values())


class PathCache:
    """On-disk cache of Yen results keyed by (topology digest, src, dst, K)."""

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._mem: Dict[str, Dict[str, List[List[int]]]] = {}
        self._dirty = set()

    def _file(self, digest: str, k: int) -> str:
        return os.path.join(self.directory, f"{digest[:32]}-k{k}.json")

    def _table(self, digest: str, k: int) -> Dict[str, List[List[int]]]:
        key = f"{digest}-{k}"
        if key not in self._mem:
            path = self._file(digest, k)
            if os.path.exists(path):
                with open(path) as fh:
                    self._mem[key] = json.load(fh)
            else:
                self._mem[key] = {}
        return self._mem[key]

    def get(self, snapshot: TopologySnapshot, src: int, dst: int, k: int) -> Optional[List[Path]]:
        hit = self._table(snapshot.digest, k).get(f"{src}-{dst}")
        if hit is None:
            return None
        return [Path.from_nodes(snapshot, nodes) for nodes in hit]

    def put(self, snapshot: TopologySnapshot, src: int, dst: int, k: int, paths: List[Path]) -> None:
        self._table(snapshot.digest, k)[f"{src}-{dst}"] = [list(p.nodes) for p in paths]
        self._dirty.add((snapshot.digest, k))

    def flush(self) -> None:
        for digest, k in sorted(self._dirty):
            with open(self._file(digest, k), "w") as fh:
                json.dump(self._table(digest, k), fh, sort_keys=True)
        self._dirty.clear()


def candidate_sets(snapshots: Sequence[TopologySnapshot], flows: Iterable, k: int,
                   cache: Optional[PathCache] = None) -> CandidateSet:
    """Apply :func:`k_shortest_paths` for every (flow, slot); flows with equal endpoints share one run."""
    check_count(k, "k", 1)
    flows = list(flows)
    out = CandidateSet(k, len(snapshots))
    for tau, snap in enumerate(snapshots):
        memo: Dict[Tuple[int, int], List[Path]] = {}
        for f in flows:
            pair = (f.src, f.dst)
            paths = memo.get(pair)
            if paths is None:
                paths = cache.get(snap, f.src, f.dst, k) if cache is not None else None
                if paths is None:
                    paths = k_shortest_paths(snap, f.src, f.dst, k)
                    if cache is not None:
                        cache.put(snap, f.src, f.dst, k, paths)
                memo[pair] = paths
            out[(f.id, tau)] = paths
    if cache is not None:
        cache.flush()
    return out
