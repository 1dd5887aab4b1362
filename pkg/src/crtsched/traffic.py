"""Periodic TT flow sets and the min-of-three deadline rule."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Dict, List, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .constellation import TopologySnapshot
from .exceptions import InvalidParameterError, UnreachablePairError
from .validation import check_count, check_positive, check_real

FLOW_FIELDS = ("id", "src", "dst", "period_s", "frame_bytes", "deadline_s")


@dataclass(frozen=True)
class TtFlow:
    id: int
    period: float  # seconds
    frame_len: int  # bytes
    src: int
    dst: int
    deadline: float  # seconds

    def __post_init__(self):
        if self.src == self.dst:
            raise InvalidParameterError(f"flow {self.id}: src == dst ({self.src})")
        check_positive(self.period, "period")
        check_count(self.frame_len, "frame_len", 1)
        check_positive(self.deadline, "deadline")

    @property
    def rate(self) -> float:
        """Average bit rate L/T."""
        return 8.0 * self.frame_len / self.period


@dataclass(frozen=True)
class DeadlinePolicy:
    alpha: float
    delta_buf: float
    d_max: float

    def __post_init__(self):
        check_real(self.alpha, "alpha", low=1.0)
        check_real(self.delta_buf, "delta_buf", low=0.0)
        check_positive(self.d_max, "d_max")


IRIDIUM_POLICY = DeadlinePolicy(alpha=1.5, delta_buf=0.030, d_max=0.100)
STARLINK_POLICY = DeadlinePolicy(alpha=2.0, delta_buf=0.080, d_max=0.500)


def compute_deadline(d_phy: float, policy: DeadlinePolicy) -> float:
    if not d_phy > 0:
        raise InvalidParameterError(f"d_phy must be positive, got {d_phy}")
    return min(policy.alpha * d_phy, d_phy + policy.delta_buf, policy.d_max)


def _delay_matrix(snapshot: TopologySnapshot) -> csr_matrix:
    n = max(snapshot.nodes) + 1 if snapshot.nodes else 0
    keys = list(snapshot.links)
    rows = [u for u, _ in keys]
    cols = [v for _, v in keys]
    vals = [snapshot.links[k].prop_delay for k in keys]
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def shortest_prop_delays(snapshot: TopologySnapshot, sources: Sequence[int]) -> np.ndarray:
    """Rows of single-source shortest propagation delays (inf where unreachable)."""
    return dijkstra(_delay_matrix(snapshot), directed=True, indices=np.asarray(sources, dtype=int))


def generate_flows(
    n: int,
    snapshot0: TopologySnapshot,
    policy: DeadlinePolicy,
    frame_len: int = 1500,
    period: float = 0.010,
    seed: int = 0,
    max_retries: int = 100,
    within_cap: bool = True,
) -> List[TtFlow]:
    """Draw ``n`` flows between uniformly random distinct satellite pairs.

    Pairs are drawn with replacement across flows. A pair without a path on
    ``snapshot0`` is redrawn, at most ``max_retries`` times per flow. With
    ``within_cap`` a pair whose propagation delay exceeds ``policy.d_max`` is
    redrawn as well, so every deadline is at least the propagation delay.
    """
    check_count(n, "n")
    if n == 0:
        return []
    nodes = np.asarray(snapshot0.nodes)
    if len(nodes) < 2:
        raise UnreachablePairError("need at least two satellites to draw a flow")
    rng = np.random.default_rng(seed)
    dist = shortest_prop_delays(snapshot0, nodes)
    pos = {int(v): i for i, v in enumerate(nodes)}
    flows = []
    for fid in range(n):
        for _ in range(max_retries + 1):
            s, d = rng.choice(len(nodes), size=2, replace=False)
            d_phy = dist[s, pos[int(nodes[d])]]
            if np.isfinite(d_phy) and (not within_cap or d_phy <= policy.d_max):
                break
        else:
            raise UnreachablePairError(f"no connected pair found for flow {fid} after {max_retries} retries")
        flows.append(TtFlow(fid, period, frame_len, int(nodes[s]), int(nodes[d]),
                            compute_deadline(float(d_phy), policy)))
    return flows


def with_uniform_deadline(flows: Sequence[TtFlow], deadline: float) -> List[TtFlow]:
    """Copy of ``flows`` with every deadline set to ``deadline`` (used by deadline sweeps)."""
    check_positive(deadline, "deadline")
    return [replace(f, deadline=deadline) for f in flows]


def flow_to_row(f: TtFlow) -> Dict:
    return {"id": f.id, "src": f.src, "dst": f.dst, "period_s": f.period,
            "frame_bytes": f.frame_len, "deadline_s": f.deadline}


def flow_from_row(row: Dict) -> TtFlow:
    return TtFlow(id=int(row["id"]), period=float(row["period_s"]), frame_len=int(row["frame_bytes"]),
                  src=int(row["src"]), dst=int(row["dst"]), deadline=float(row["deadline_s"]))


def save_flows(path, flows: Sequence[TtFlow]) -> None:
    path = str(path)
    if path.endswith(".csv"):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=FLOW_FIELDS)
            w.writeheader()
            for f in flows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in flow_to_row(f).items()})
    else:
        with open(path, "w") as fh:
            json.dump({"flows": [flow_to_row(f) for f in flows]}, fh, indent=1)


def load_flows(path) -> List[TtFlow]:
    path = str(path)
    if path.endswith(".csv"):
        with open(path, newline="") as fh:
            return [flow_from_row(r) for r in csv.DictReader(fh)]
    with open(path) as fh:
        return [flow_from_row(r) for r in json.load(fh)["flows"]]
