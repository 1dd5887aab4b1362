"""Per-cell metrics: success rate, overlap distribution, rescheduling, jitter, normalized delay."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import InvalidParameterError
from ..scheduler import Schedule
from ..timing import LinkLoadState


def rescheduling_count(schedule: Schedule, slot: int) -> int:
    """Flows whose path at ``slot`` differs from the one at ``slot - 1``, plus flows lost at ``slot``.

    A flow counts as carried in a slot when the scheduler placed it there, even
    if it was later rejected during residence allocation.
    """
    if not 1 <= slot < schedule.num_slots:
        raise InvalidParameterError(f"slot must be in [1, {schedule.num_slots - 1}], got {slot}")
    count = 0
    for e in schedule:
        if e.lost_at_slot == slot:
            count += 1
            continue
        prev, cur = e.path_per_slot.get(slot - 1), e.path_per_slot.get(slot)
        if prev is not None and cur is not None and prev.nodes != cur.nodes:
            count += 1
    return count


def rescheduled_per_slot(schedule: Schedule) -> List[int]:
    return [rescheduling_count(schedule, t) for t in range(1, schedule.num_slots)]


def overlap_cdf(load: Union[LinkLoadState, Schedule, Mapping, Iterable[int]]) -> List[Tuple[int, float]]:
    """Empirical CDF of overlap degree over used links.

    Accepts a load state (every (slot, link) pair counts once), a schedule, a
    ``link -> n_e`` mapping or a plain sequence of degrees. Zeros are ignored.
    """
    if isinstance(load, Schedule):
        load = load.load
    if isinstance(load, LinkLoadState):
        degrees = [n for t in range(load.num_slots) for n in load.overlaps(t).values()]
    elif isinstance(load, Mapping):
        degrees = list(load.values())
    else:
        degrees = list(load)
    hist = Counter(int(n) for n in degrees if n >= 1)
    total = sum(hist.values())
    out, acc = [], 0
    for n in sorted(hist):
        acc += hist[n]
        out.append((n, acc / total))
    return out


def normalized_delay(schedule: Schedule, flows: Sequence) -> Dict[int, float]:
    """d_target / deadline for each scheduled flow."""
    deadline = {f.id: f.deadline for f in flows}
    return {e.flow_id: e.d_target / deadline[e.flow_id] for e in schedule if e.scheduled}


def jitter_percentiles(records: Iterable, schedule: Schedule) -> Tuple[float, float]:
    """p50 and p99 of (e2e delay - d_target) over delivered frames; NaN when there are none."""
    extra = [r.e2e_delay - schedule[r.flow_id].d_target for r in records]
    if not extra:
        return float("nan"), float("nan")
    p50, p99 = np.percentile(np.asarray(extra), [50, 99])
    return float(p50), float(p99)


@dataclass
class CellMetrics:
    """Metrics of one (algorithm, seed, sweep point) cell."""

    algo: str
    seed: int
    sweep_param: str
    n_flows: int
    success_rate: float
    max_overlap: int
    overlap_histogram: Dict[int, int]
    rescheduled_per_slot: List[int]
    normalized_delay: Dict[int, float]
    p50_jitter_s: float = float("nan")
    p99_jitter_s: float = float("nan")
    wall_time_s: float = 0.0
    deadline_s: Optional[float] = None

    @property
    def resched_mean(self) -> float:
        r = self.rescheduled_per_slot
        return float(np.mean(r)) if r else 0.0

    @property
    def frac_single(self) -> float:
        """Fraction of used (slot, link) pairs with exactly one source."""
        total = sum(self.overlap_histogram.values())
        return self.overlap_histogram.get(1, 0) / total if total else 1.0

    @property
    def key(self) -> Tuple:
        return (self.sweep_param, self.n_flows, -1.0 if self.deadline_s is None else self.deadline_s,
                self.algo, self.seed)

    def row(self) -> Dict[str, object]:
        return {
            "algo": self.algo,
            "seed": self.seed,
            "sweep_param": self.sweep_param,
            "n_flows": self.n_flows,
            "success_rate": self.success_rate,
            "max_overlap": self.max_overlap,
            "p50_jitter_s": self.p50_jitter_s,
            "p99_jitter_s": self.p99_jitter_s,
            "resched_mean": self.resched_mean,
            "wall_time_s": self.wall_time_s,
        }

    def to_dict(self) -> Dict[str, object]:
        d = self.row()
        d.update({
            "deadline_s": self.deadline_s,
            "overlap_histogram": {str(k): v for k, v in sorted(self.overlap_histogram.items())},
            "rescheduled_per_slot": list(self.rescheduled_per_slot),
            "normalized_delay": {str(k): v for k, v in sorted(self.normalized_delay.items())},
        })
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CellMetrics":
        return cls(
            algo=d["algo"], seed=int(d["seed"]), sweep_param=d["sweep_param"], n_flows=int(d["n_flows"]),
            success_rate=float(d["success_rate"]), max_overlap=int(d["max_overlap"]),
            overlap_histogram={int(k): int(v) for k, v in d["overlap_histogram"].items()},
            rescheduled_per_slot=[int(x) for x in d["rescheduled_per_slot"]],
            normalized_delay={int(k): float(v) for k, v in d["normalized_delay"].items()},
            p50_jitter_s=float(d["p50_jitter_s"]) if d["p50_jitter_s"] is not None else float("nan"),
            p99_jitter_s=float(d["p99_jitter_s"]) if d["p99_jitter_s"] is not None else float("nan"),
            wall_time_s=float(d["wall_time_s"]), deadline_s=d.get("deadline_s"),
        )


def cell_metrics(schedule: Schedule, flows: Sequence, *, seed: int, sweep_param: str, deadline=None,
                 records=None, wall_time: float = 0.0) -> CellMetrics:
    p50, p99 = jitter_percentiles(records, schedule) if records is not None else (float("nan"), float("nan"))
    return CellMetrics(
        algo=schedule.algorithm, seed=seed, sweep_param=sweep_param, n_flows=len(flows),
        success_rate=schedule.success_rate(), max_overlap=schedule.max_overlap(),
        overlap_histogram=schedule.overlap_histogram(),
        rescheduled_per_slot=rescheduled_per_slot(schedule) if schedule.num_slots > 1 else [],
        normalized_delay=normalized_delay(schedule, flows), p50_jitter_s=p50, p99_jitter_s=p99,
        wall_time_s=wall_time, deadline_s=deadline,
    )


@dataclass
class MetricsReport:
    """All cells of one experiment plus any cells rejected by the verifier."""

    name: str
    cells: List[CellMetrics] = field(default_factory=list)
    # (cell key, violation strings) for schedules that failed verification
    failures: List[Tuple[Tuple, List[str]]] = field(default_factory=list)

    def sorted_cells(self) -> List[CellMetrics]:
        return sorted(self.cells, key=lambda c: c.key)

    def select(self, **where) -> List[CellMetrics]:
        return [c for c in self.sorted_cells() if all(getattr(c, k) == v for k, v in where.items())]

    def mean(self, attr: str, **where) -> float:
        vals = [getattr(c, attr) for c in self.select(**where)]
        return float(np.mean(vals)) if vals else float("nan")

    def summary(self, attr: str = "success_rate") -> Dict[Tuple, Tuple[float, float]]:
        """(algo, sweep value) -> (mean, stdev) across seeds."""
        groups: Dict[Tuple, List[float]] = {}
        for c in self.sorted_cells():
            x = c.deadline_s if c.sweep_param == "deadline_s" else c.n_flows
            groups.setdefault((c.algo, x), []).append(getattr(c, attr))
        return {k: (float(np.mean(v)), float(np.std(v))) for k, v in groups.items()}

    @property
    def ok(self) -> bool:
        return not self.failures
