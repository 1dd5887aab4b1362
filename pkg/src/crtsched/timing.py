"""Delay and jitter arithmetic: transmission and link delays, fixed path delay,
source-level overlap bookkeeping and the collision worst-case delay bound."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Union

from .constellation import LinkKey, TopologySnapshot
from .exceptions import InvalidParameterError, TopologyMismatchError
from .validation import check_count, check_real

IMMEDIATE = "immediate"
NEVER = "never"


@dataclass(frozen=True)
class NodeParams:
    d_proc: float = 1e-3  # fixed processing delay per intermediate node, s
    t_buffer_max: float = 50e-3  # longest a frame may be held at one hop, s

    def __post_init__(self):
        check_real(self.d_proc, "d_proc", low=0.0, low_inclusive=False)
        check_real(self.t_buffer_max, "t_buffer_max", low=self.d_proc)


def transmission_time(frame_len: int, bandwidth: float) -> float:
    if not bandwidth > 0:
        raise InvalidParameterError(f"bandwidth must be positive, got {bandwidth}")
    if frame_len < 0:
        raise InvalidParameterError(f"frame_len must be >= 0, got {frame_len}")
    return 8.0 * frame_len / bandwidth


def link_delay(flow, link: LinkKey, snapshot: TopologySnapshot) -> float:
    try:
        info = snapshot.links[link]
    except KeyError:
        raise TopologyMismatchError(f"link {link} not in slot {snapshot.slot}") from None
    if not info.prop_delay > 0:
        raise InvalidParameterError(f"link {link} has non-positive propagation delay")
    return info.prop_delay + transmission_time(flow.frame_len, info.bandwidth)


def path_fixed_delay(flow, path, snapshot: TopologySnapshot, node_params: NodeParams) -> float:
    """Link delays along ``path`` plus the processing delay of its intermediate nodes."""
    if path.src != flow.src or path.dst != flow.dst:
        raise TopologyMismatchError(f"path {path.nodes} does not join flow {flow.id} endpoints")
    total = sum(link_delay(flow, e, snapshot) for e in path.links)
    return total + node_params.d_proc * len(path.intermediate_nodes)


def wcd_link(overlap: int, c_max: float) -> float:
    """Collision bound of one link: every other distinct source sends one max-size frame first."""
    check_count(overlap, "overlap")
    return max(overlap - 1, 0) * c_max


def wcd_link_exact(interferer_tx_times: Iterable[float]) -> float:
    """Sum of the transmission times of the competing frames (before simplifying to ``C_max``)."""
    return float(sum(interferer_tx_times))


def drift_collision_time(phase_gap: float, frame_time: float, drift_rate: float) -> Union[float, str]:
    """Time until two drifting periodic flows start to overlap on a shared link.

    Returns :data:`IMMEDIATE` when the windows already overlap and
    :data:`NEVER` without relative drift.
    """
    if phase_gap < 0 or frame_time <= 0 or drift_rate < 0:
        raise InvalidParameterError("phase_gap and drift_rate must be >= 0 and frame_time > 0")
    if phase_gap < frame_time:
        return IMMEDIATE
    if drift_rate == 0:
        return NEVER
    return (phase_gap - frame_time) / drift_rate


class LinkLoadState:
    """Per (slot, directed link) multiset of the sources of committed flows.

    The overlap degree is the number of *distinct* sources; a flow count per
    source is kept so releasing one of several same-source flows leaves the
    overlap unchanged.
    """

    def __init__(self, num_slots: int):
        self.num_slots = num_slots
        self._src: list = [defaultdict(dict) for _ in range(num_slots)]

    def overlap(self, slot: int, link: LinkKey) -> int:
        s = self._src[slot].get(link)
        return len(s) if s else 0

    def src_on_link(self, slot: int, link: LinkKey) -> frozenset:
        s = self._src[slot].get(link)
        return frozenset(s) if s else frozenset()

    def add(self, slot: int, links: Iterable[LinkKey], src: int) -> list:
        """Record one flow of ``src`` on ``links``; returns the links whose overlap grew."""
        grown = []
        table = self._src[slot]
        for e in links:
            counts = table[e]
            c = counts.get(src, 0)
            if c == 0:
                grown.append(e)
            counts[src] = c + 1
        return grown

    def remove(self, slot: int, links: Iterable[LinkKey], src: int) -> None:
        table = self._src[slot]
        for e in links:
            counts = table[e]
            c = counts[src] - 1
            if c:
                counts[src] = c
            else:
                del counts[src]
                if not counts:
                    del table[e]

    def links(self, slot: int):
        return [e for e, s in self._src[slot].items() if s]

    def overlaps(self, slot: int) -> Dict[LinkKey, int]:
        return {e: len(s) for e, s in self._src[slot].items() if s}

    def max_overlap(self) -> int:
        return max((len(s) for table in self._src for s in table.values()), default=0)

    def copy(self) -> "LinkLoadState":
        out = LinkLoadState(self.num_slots)
        for slot, table in enumerate(self._src):
            for e, counts in table.items():
                if counts:
                    out._src[slot][e] = dict(counts)
        return out


def path_wcd(path, slot: int, load: LinkLoadState, c_max: Union[float, Mapping[LinkKey, float]]) -> float:
    """Sum of per-link collision bounds along ``path`` under ``load``."""
    if isinstance(c_max, Mapping):
        return sum(wcd_link(load.overlap(slot, e), c_max[e]) for e in path.links)
    return sum(wcd_link(load.overlap(slot, e), c_max) for e in path.links)
