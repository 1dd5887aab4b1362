from .baselines import lag_schedule, spf_schedule, strict_nonoverlap_schedule
from .crt import check_global_feasibility, crt_fast, find_max_feasible_layer
from .engine import ResidenceResult, ScheduleRun, SlotContext, allocate_residence, fixed_delay
from .schedule import SCHEDULE_FORMAT, Schedule, ScheduleEntry, SchedulerConfig

ALGORITHMS = {
    "crt_fast": crt_fast,
    "spf": spf_schedule,
    "lag": lag_schedule,
    "strict": strict_nonoverlap_schedule,
}

__all__ = [
    "ALGORITHMS",
    "SCHEDULE_FORMAT",
    "ResidenceResult",
    "Schedule",
    "ScheduleEntry",
    "ScheduleRun",
    "SchedulerConfig",
    "SlotContext",
    "allocate_residence",
    "check_global_feasibility",
    "crt_fast",
    "find_max_feasible_layer",
    "fixed_delay",
    "lag_schedule",
    "spf_schedule",
    "strict_nonoverlap_schedule",
]
