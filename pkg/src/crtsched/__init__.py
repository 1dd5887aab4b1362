"""Collision-tolerant time-triggered scheduling over LEO constellations."""
__version__ = "0.1.0"

from .constellation import (IRIDIUM, STARLINK, IslRule, PerturbationConfig, ShellParams, TopologySnapshot,
                            build_constellation, perturb_sequence, snapshot_sequence)
from .estimators import CrtFastScheduler, LagScheduler, SpfScheduler, StrictScheduler
from .kpaths import Path, candidate_sets, k_shortest_paths
from .oracle import exact_lex_solve, verify_schedule
from .scheduler import ALGORITHMS, Schedule, SchedulerConfig, crt_fast
from .simulator import ClockModel, simulate_run
from .timing import NodeParams
from .traffic import DeadlinePolicy, TtFlow, generate_flows

__all__ = [
    "ALGORITHMS", "ClockModel", "CrtFastScheduler", "DeadlinePolicy", "IRIDIUM", "IslRule", "LagScheduler",
    "NodeParams", "Path", "PerturbationConfig", "STARLINK", "Schedule", "SchedulerConfig", "ShellParams",
    "SpfScheduler", "StrictScheduler", "TopologySnapshot", "TtFlow", "build_constellation", "candidate_sets",
    "crt_fast", "exact_lex_solve", "generate_flows", "k_shortest_paths", "perturb_sequence",
    "simulate_run", "snapshot_sequence", "verify_schedule",
]
