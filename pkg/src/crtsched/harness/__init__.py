from .config import PRESETS, ExperimentConfig, SimulationConfig, TrafficConfig, config_from_dict, load_config, preset
from .export import METRICS_COLUMNS, export, read_metrics_csv, read_report_json, write_metrics_csv, write_report_json
from .metrics import CellMetrics, MetricsReport, normalized_delay, overlap_cdf, rescheduling_count
from .runner import run_experiment

__all__ = [
    "CellMetrics",
    "ExperimentConfig",
    "METRICS_COLUMNS",
    "MetricsReport",
    "PRESETS",
    "SimulationConfig",
    "TrafficConfig",
    "config_from_dict",
    "export",
    "load_config",
    "normalized_delay",
    "overlap_cdf",
    "preset",
    "read_metrics_csv",
    "read_report_json",
    "rescheduling_count",
    "run_experiment",
    "write_metrics_csv",
    "write_report_json",
]
