"""Scheduler objects with the familiar ``fit`` / ``predict`` / ``get_params`` interface.

``fit(flows, snapshots)`` runs the scheduler; ``predict(flows)`` returns the
admission decision (0/1) for each flow; ``score`` is the success rate.

>>> est = CrtFastScheduler(k=3).fit(flows, snapshots)       # doctest: +SKIP
>>> est.schedule_.max_overlap(), est.score(flows)          # doctest: +SKIP
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .kpaths import CandidateSet, candidate_sets
from .scheduler import ALGORITHMS, Schedule, SchedulerConfig
from .timing import NodeParams

__all__ = ["CrtFastScheduler", "LagScheduler", "NotFittedError", "SpfScheduler", "StrictScheduler",
           "make_scheduler"]


class _Scheduler(BaseEstimator):
    algorithm = ""

    def __init__(self, k: int = 5, d_proc: float = 1e-3, t_buffer_max: float = 50e-3,
                 max_frame_bytes: Optional[int] = None):
        self.k = k
        self.d_proc = d_proc
        self.t_buffer_max = t_buffer_max
        self.max_frame_bytes = max_frame_bytes

    def _config(self) -> SchedulerConfig:
        return SchedulerConfig(k=self.k, node_params=NodeParams(self.d_proc, self.t_buffer_max),
                               max_frame_bytes=self.max_frame_bytes)

    def fit(self, flows: Sequence, snapshots: Sequence, candidates: Optional[CandidateSet] = None):
        """Schedule ``flows`` over ``snapshots``; candidates are computed if not given."""
        config = self._config()
        flows = list(flows)
        snapshots = list(snapshots)
        if not snapshots:
            raise ValueError("need at least one snapshot")
        if candidates is None:
            candidates = candidate_sets(snapshots, flows, self.k)
        self.schedule_: Schedule = ALGORITHMS[self.algorithm](snapshots, flows, candidates, config)
        self.n_flows_ = len(flows)
        self.n_slots_ = len(snapshots)
        return self

    def predict(self, flows: Sequence) -> np.ndarray:
        """1 where the flow was admitted, 0 where it was rejected or never seen."""
        check_is_fitted(self, "schedule_")
        entries = self.schedule_.entries
        return np.array([int(f.id in entries and entries[f.id].scheduled) for f in flows], dtype=np.int8)

    def score(self, flows: Sequence, y=None) -> float:
        """Fraction of ``flows`` admitted."""
        pred = self.predict(flows)
        return float(pred.mean()) if len(pred) else 0.0


class CrtFastScheduler(_Scheduler):
    """Iterative layering with path continuity."""

    algorithm = "crt_fast"

    def __init__(self, k: int = 5, d_proc: float = 1e-3, t_buffer_max: float = 50e-3,
                 max_frame_bytes: Optional[int] = None, enable_path_continuity: bool = True,
                 layer_cap: Optional[int] = None):
        super().__init__(k, d_proc, t_buffer_max, max_frame_bytes)
        self.enable_path_continuity = enable_path_continuity
        self.layer_cap = layer_cap

    def _config(self) -> SchedulerConfig:
        return SchedulerConfig(k=self.k, node_params=NodeParams(self.d_proc, self.t_buffer_max),
                               enable_path_continuity=self.enable_path_continuity, layer_cap=self.layer_cap,
                               max_frame_bytes=self.max_frame_bytes)

    @property
    def layers_(self):
        check_is_fitted(self, "schedule_")
        return self.schedule_.layers


class SpfScheduler(_Scheduler):
    """Shortest candidate only."""

    algorithm = "spf"


class LagScheduler(_Scheduler):
    """Least currently loaded candidate."""

    algorithm = "lag"


class StrictScheduler(_Scheduler):
    """Edge-disjoint across sources."""

    algorithm = "strict"


_BY_NAME = {c.algorithm: c for c in (CrtFastScheduler, SpfScheduler, LagScheduler, StrictScheduler)}


def make_scheduler(name: str, **params) -> _Scheduler:
    try:
        return _BY_NAME[name](**params)
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {sorted(_BY_NAME)}") from None
