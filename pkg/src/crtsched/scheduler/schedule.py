"""Schedule containers and their JSON form."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..constellation import TopologySnapshot
from ..exceptions import InvalidParameterError
from ..kpaths import Path
from ..timing import LinkLoadState, NodeParams
from ..validation import check_count

SCHEDULE_FORMAT = "crtsched.schedule/1"


@dataclass(frozen=True)
class SchedulerConfig:
    k: int = 5
    node_params: NodeParams = field(default_factory=NodeParams)
    enable_path_continuity: bool = True
    layer_cap: Optional[int] = None
    # C_max uses this frame size; None means the largest frame of the flow set.
    max_frame_bytes: Optional[int] = None

    def __post_init__(self):
        check_count(self.k, "k", 1)
        if self.layer_cap is not None:
            check_count(self.layer_cap, "layer_cap", 1)
        if self.max_frame_bytes is not None:
            check_count(self.max_frame_bytes, "max_frame_bytes", 1)


@dataclass
class ScheduleEntry:
    flow_id: int
    scheduled: bool = False
    path_per_slot: Dict[int, Path] = field(default_factory=dict)
    d_target: Optional[float] = None
    # (slot, node) -> seconds held there; node is the source only for paths without relays
    residence: Dict[Tuple[int, int], float] = field(default_factory=dict)
    wcd_total_per_slot: Dict[int, float] = field(default_factory=dict)
    lost_at_slot: Optional[int] = None
    reason: str = ""

    def to_dict(self) -> dict:
        slots = sorted(self.path_per_slot)
        out = {
            "flow_id": self.flow_id,
            "y": int(self.scheduled),
            "paths": {str(t): list(self.path_per_slot[t].nodes) for t in slots},
            "d_target_s": self.d_target,
            "delta_t_s": {
                str(t): {str(v): dt for (tt, v), dt in sorted(self.residence.items()) if tt == t} for t in slots
            },
            "wcd_total_s": {str(t): self.wcd_total_per_slot[t] for t in sorted(self.wcd_total_per_slot)},
        }
        if self.lost_at_slot is not None:
            out["lost_at_slot"] = self.lost_at_slot
        if self.reason:
            out["reason"] = self.reason
        return out

    @classmethod
    def from_dict(cls, data: dict, snapshots: Sequence[TopologySnapshot]) -> "ScheduleEntry":
        paths = {int(t): Path.from_nodes(snapshots[int(t)], nodes) for t, nodes in data["paths"].items()}
        res = {(int(t), int(v)): float(dt) for t, hops in data["delta_t_s"].items() for v, dt in hops.items()}
        return cls(
            flow_id=int(data["flow_id"]),
            scheduled=bool(data["y"]),
            path_per_slot=paths,
            d_target=data["d_target_s"],
            residence=res,
            wcd_total_per_slot={int(t): float(w) for t, w in data["wcd_total_s"].items()},
            lost_at_slot=data.get("lost_at_slot"),
            reason=data.get("reason", ""),
        )


class Schedule:
    """Result of one scheduler run over all slots."""

    def __init__(self, algorithm: str, num_slots: int, node_params: NodeParams, max_frame_bytes: int,
                 entries: Optional[Dict[int, ScheduleEntry]] = None, load: Optional[LinkLoadState] = None,
                 layers: Optional[List[List[List[int]]]] = None):
        self.algorithm = algorithm
        self.num_slots = num_slots
        self.node_params = node_params
        self.max_frame_bytes = max_frame_bytes
        self.entries: Dict[int, ScheduleEntry] = dict(entries or {})
        self.load = load if load is not None else LinkLoadState(num_slots)
        # per slot, the flow ids committed by each layer (layering algorithms only)
        self.layers: List[List[List[int]]] = layers if layers is not None else [[] for _ in range(num_slots)]

    def __getitem__(self, flow_id: int) -> ScheduleEntry:
        return self.entries[flow_id]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries[k] for k in sorted(self.entries))

    @property
    def scheduled_ids(self) -> List[int]:
        return sorted(k for k, e in self.entries.items() if e.scheduled)

    @property
    def j1(self) -> int:
        return sum(1 for e in self.entries.values() if e.scheduled)

    def success_rate(self) -> float:
        return self.j1 / len(self.entries) if self.entries else 0.0

    def max_overlap(self) -> int:
        return self.load.max_overlap()

    def overlap_histogram(self) -> Dict[int, int]:
        """Overlap degree -> number of (slot, directed link) pairs carrying that many sources."""
        hist: Counter = Counter()
        for t in range(self.num_slots):
            hist.update(self.load.overlaps(t).values())
        return dict(sorted(hist.items()))

    def to_dict(self) -> dict:
        return {
            "format": SCHEDULE_FORMAT,
            "algorithm": self.algorithm,
            "num_slots": self.num_slots,
            "d_proc_s": self.node_params.d_proc,
            "t_buffer_max_s": self.node_params.t_buffer_max,
            "max_frame_bytes": self.max_frame_bytes,
            "flows": [e.to_dict() for e in self],
            "layers": self.layers,
        }

    @classmethod
    def from_dict(cls, data: dict, snapshots: Sequence[TopologySnapshot], flows: Iterable = ()) -> "Schedule":
        """Rebuild a schedule; ``flows`` (the TT flows) are needed to restore the link load."""
        if data.get("format") != SCHEDULE_FORMAT:
            raise InvalidParameterError(f"not a schedule document: format={data.get('format')!r}")
        if len(snapshots) != data["num_slots"]:
            raise InvalidParameterError(f"schedule has {data['num_slots']} slots, got {len(snapshots)} snapshots")
        entries = {int(e["flow_id"]): ScheduleEntry.from_dict(e, snapshots) for e in data["flows"]}
        out = cls(data["algorithm"], data["num_slots"], NodeParams(data["d_proc_s"], data["t_buffer_max_s"]),
                  data["max_frame_bytes"], entries, layers=data.get("layers"))
        src = {f.id: f.src for f in flows}
        for e in entries.values():
            if e.scheduled and e.flow_id in src:
                for t, p in e.path_per_slot.items():
                    out.load.add(t, p.links, src[e.flow_id])
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load_file(cls, path, snapshots: Sequence[TopologySnapshot], flows: Iterable = ()) -> "Schedule":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), snapshots, flows)
