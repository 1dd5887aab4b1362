"""Experiment configuration: TOML files and built-in presets.

A config is a TOML document with the tables shown below; every key is
optional except where a preset is not given. ``preset`` at top level starts
from a built-in experiment and the file overrides individual keys::

    name = "my-run"
    preset = "iridium-default"
    seeds = [0, 1, 2, 3, 4]
    algorithms = ["crt_fast", "spf", "lag", "strict"]
    k = 5

    [constellation]           # shell = "iridium" | "starlink", or explicit fields
    shell = "iridium"
    planes = 6
    sats_per_plane = 11
    altitude_km = 780.0
    inclination_deg = 86.4
    phasing_offset = 0.5
    polar_cutoff_deg = 70.0
    bandwidth_bps = 100e6
    num_slots = 10
    slot_duration_s = 10.0

    [traffic]
    n_flows = [200, 400]      # one sweep point per entry
    frame_bytes = 1500
    period_s = 0.010
    alpha = 1.5
    delta_buf_s = 0.030
    d_max_s = 0.100
    deadlines_s = [0.032, 0.064]   # optional: uniform-deadline sweep

    [node]
    d_proc_s = 0.001
    t_buffer_max_s = 0.050
    max_frame_bytes = 1500    # optional, defaults to the largest flow frame

    [scheduler]
    enable_path_continuity = true
    layer_cap = 0             # 0 = unlimited

    [perturbation]            # optional
    link_fail_fraction = 0.03
    delay_perturb_fraction = 0.15
    delay_perturb_magnitude = 0.1
    rng_seed = 0

    [simulation]              # optional
    horizon_s = 1.0
    start_s = 0.0
    offset_max_s = 0.010
    drift_max_ppm = 20.0
    residence_in_local_time = false

    [output]
    dir = "results"
    svg = false
"""
from __future__ import annotations

import copy
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..constellation import IRIDIUM, STARLINK, IslRule, PerturbationConfig, ShellParams
from ..exceptions import ConfigError, CrtError
from ..scheduler import ALGORITHMS
from ..timing import NodeParams
from ..traffic import IRIDIUM_POLICY, STARLINK_POLICY, DeadlinePolicy

SHELLS = {"iridium": (IRIDIUM, IRIDIUM_POLICY), "starlink": (STARLINK, STARLINK_POLICY)}


@dataclass(frozen=True)
class TrafficConfig:
    n_flows: List[int]
    frame_bytes: int = 1500
    period: float = 0.010
    policy: DeadlinePolicy = IRIDIUM_POLICY
    deadlines: Optional[List[float]] = None


@dataclass(frozen=True)
class SimulationConfig:
    horizon: float = 1.0
    start: float = 0.0
    offset_max: float = 10e-3
    drift_max: float = 20e-6
    residence_in_local_time: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    shell: ShellParams
    isl: IslRule
    num_slots: int
    slot_duration: float
    traffic: TrafficConfig
    k: int = 5
    node_params: NodeParams = field(default_factory=NodeParams)
    max_frame_bytes: Optional[int] = None
    enable_path_continuity: bool = True
    layer_cap: Optional[int] = None
    algorithms: List[str] = field(default_factory=lambda: ["crt_fast"])
    perturbation: Optional[PerturbationConfig] = None
    simulation: Optional[SimulationConfig] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    output_dir: str = "results"
    svg: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Plain nested dict (the manifest form); round-trips through :func:`config_from_dict`."""
        t = self.traffic
        out = {
            "name": self.name,
            "seeds": list(self.seeds),
            "algorithms": list(self.algorithms),
            "k": self.k,
            "constellation": {
                "planes": self.shell.planes,
                "sats_per_plane": self.shell.sats_per_plane,
                "altitude_km": self.shell.altitude,
                "inclination_deg": self.shell.inclination,
                "phasing_offset": self.shell.phasing_offset,
                "epoch_s": self.shell.epoch,
                "polar_cutoff_deg": self.isl.polar_cutoff,
                "bandwidth_bps": self.isl.bandwidth,
                "num_slots": self.num_slots,
                "slot_duration_s": self.slot_duration,
            },
            "traffic": {
                "n_flows": list(t.n_flows),
                "frame_bytes": t.frame_bytes,
                "period_s": t.period,
                "alpha": t.policy.alpha,
                "delta_buf_s": t.policy.delta_buf,
                "d_max_s": t.policy.d_max,
            },
            "node": {"d_proc_s": self.node_params.d_proc, "t_buffer_max_s": self.node_params.t_buffer_max},
            "scheduler": {"enable_path_continuity": self.enable_path_continuity,
                          "layer_cap": self.layer_cap or 0},
            "output": {"dir": self.output_dir, "svg": self.svg},
        }
        if self.shell.raan_spread is not None:
            out["constellation"]["raan_spread_deg"] = self.shell.raan_spread
        if t.deadlines is not None:
            out["traffic"]["deadlines_s"] = list(t.deadlines)
        if self.max_frame_bytes is not None:
            out["node"]["max_frame_bytes"] = self.max_frame_bytes
        if self.perturbation is not None:
            out["perturbation"] = asdict(self.perturbation)
        if self.simulation is not None:
            s = self.simulation
            out["simulation"] = {"horizon_s": s.horizon, "start_s": s.start, "offset_max_s": s.offset_max,
                                 "drift_max_ppm": s.drift_max * 1e6,
                                 "residence_in_local_time": s.residence_in_local_time}
        return out


PRESETS: Dict[str, Dict[str, Any]] = {
    "iridium-default": {
        "name": "iridium-default",
        "seeds": [0, 1, 2, 3, 4],
        "algorithms": ["crt_fast", "spf", "lag", "strict"],
        "constellation": {"shell": "iridium", "num_slots": 10, "slot_duration_s": 10.0},
        "traffic": {"n_flows": [200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000]},
    },
    "starlink-default": {
        "name": "starlink-default",
        "seeds": [0, 1, 2, 3, 4],
        "algorithms": ["crt_fast", "spf", "lag", "strict"],
        "constellation": {"shell": "starlink", "num_slots": 10, "slot_duration_s": 10.0},
        "traffic": {"n_flows": [1000, 2000, 4000]},
    },
    "handover-400": {
        "name": "handover-400",
        "seeds": [0, 1, 2, 3, 4],
        "algorithms": ["crt_fast", "spf", "lag"],
        "constellation": {"shell": "iridium", "num_slots": 11, "slot_duration_s": 10.0},
        "traffic": {"n_flows": [400]},
        "perturbation": {"link_fail_fraction": 0.03, "delay_perturb_fraction": 0.15,
                         "delay_perturb_magnitude": 0.1, "rng_seed": 0},
    },
    "scalability": {
        "name": "scalability",
        "seeds": [0],
        "algorithms": ["crt_fast"],
        "constellation": {"shell": "starlink", "num_slots": 1, "slot_duration_s": 10.0},
        "traffic": {"n_flows": [1000, 2000, 4000, 10000]},
    },
}

_TOP = {"name", "preset", "seeds", "algorithms", "k", "constellation", "traffic", "node", "scheduler",
        "perturbation", "simulation", "output"}
_TABLES = {
    "constellation": {"shell", "planes", "sats_per_plane", "altitude_km", "inclination_deg", "phasing_offset",
                      "epoch_s", "raan_spread_deg", "polar_cutoff_deg", "bandwidth_bps", "num_slots",
                      "slot_duration_s"},
    "traffic": {"n_flows", "frame_bytes", "period_s", "alpha", "delta_buf_s", "d_max_s", "deadlines_s"},
    "node": {"d_proc_s", "t_buffer_max_s", "max_frame_bytes"},
    "scheduler": {"enable_path_continuity", "layer_cap"},
    "perturbation": {"link_fail_fraction", "delay_perturb_fraction", "delay_perturb_magnitude", "rng_seed"},
    "simulation": {"horizon_s", "start_s", "offset_max_s", "drift_max_ppm", "residence_in_local_time"},
    "output": {"dir", "svg"},
}


def _merge(base: Dict[str, Any], over: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _list(val, name, kind):
    vals = val if isinstance(val, list) else [val]
    try:
        return [kind(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of {kind.__name__}, got {val!r}") from None


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a nested dict (parsed TOML) into an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a table")
    if "preset" in data:
        name = data["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        data = _merge(PRESETS[name], {k: v for k, v in data.items() if k != "preset"})
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for table, keys in _TABLES.items():
        sub = data.get(table, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"[{table}] must be a table")
        extra = set(sub) - keys
        if extra:
            raise ConfigError(f"unknown keys in [{table}]: {sorted(extra)}")
    try:
        return _build(data)
    except ConfigError:
        raise
    except (CrtError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _build(data: Dict[str, Any]) -> ExperimentConfig:
    c = data.get("constellation", {})
    shell_name = c.get("shell")
    if shell_name is not None and shell_name not in SHELLS:
        raise ConfigError(f"unknown shell {shell_name!r}; choose from {sorted(SHELLS)}")
    base_shell, base_policy = SHELLS.get(shell_name, (None, IRIDIUM_POLICY))
    if base_shell is None and not {"planes", "sats_per_plane", "altitude_km", "inclination_deg"} <= set(c):
        raise ConfigError("[constellation] needs shell or planes, sats_per_plane, altitude_km, inclination_deg")
    shell = ShellParams(
        planes=c.get("planes", base_shell.planes if base_shell else None),
        sats_per_plane=c.get("sats_per_plane", base_shell.sats_per_plane if base_shell else None),
        altitude=float(c.get("altitude_km", base_shell.altitude if base_shell else 0)),
        inclination=float(c.get("inclination_deg", base_shell.inclination if base_shell else 0)),
        phasing_offset=float(c.get("phasing_offset", base_shell.phasing_offset if base_shell else 0.5)),
        epoch=float(c.get("epoch_s", 0.0)),
        raan_spread=c.get("raan_spread_deg"),
    )
    isl = IslRule(polar_cutoff=c.get("polar_cutoff_deg", 70.0), bandwidth=float(c.get("bandwidth_bps", 100e6)))
    t = data.get("traffic", {})
    if "n_flows" not in t:
        raise ConfigError("[traffic] n_flows is required")
    n_flows = _list(t["n_flows"], "n_flows", int)
    if not n_flows or any(n < 0 for n in n_flows):
        raise ConfigError("n_flows must be a nonempty list of non-negative integers")
    policy = DeadlinePolicy(float(t.get("alpha", base_policy.alpha)),
                            float(t.get("delta_buf_s", base_policy.delta_buf)),
                            float(t.get("d_max_s", base_policy.d_max)))
    deadlines = _list(t["deadlines_s"], "deadlines_s", float) if "deadlines_s" in t else None
    if deadlines is not None and (not deadlines or any(d <= 0 for d in deadlines)):
        raise ConfigError("deadlines_s must be a nonempty list of positive seconds")
    traffic = TrafficConfig(n_flows, int(t.get("frame_bytes", 1500)), float(t.get("period_s", 0.010)), policy,
                            deadlines)
    if traffic.frame_bytes <= 0 or traffic.period <= 0:
        raise ConfigError("frame_bytes and period_s must be positive")
    if 8.0 * traffic.frame_bytes / isl.bandwidth >= traffic.period:
        raise ConfigError("one frame takes longer to send than a period")
    node = data.get("node", {})
    node_params = NodeParams(float(node.get("d_proc_s", 1e-3)), float(node.get("t_buffer_max_s", 50e-3)))
    algorithms = _list(data.get("algorithms", ["crt_fast"]), "algorithms", str)
    if not algorithms:
        raise ConfigError("at least one algorithm is required")
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise ConfigError(f"unknown algorithms {bad}; choose from {sorted(ALGORITHMS)}")
    seeds = _list(data.get("seeds", [0]), "seeds", int)
    if not seeds:
        raise ConfigError("seeds must be nonempty")
    sched = data.get("scheduler", {})
    layer_cap = int(sched.get("layer_cap", 0)) or None
    pert = data.get("perturbation")
    perturbation = PerturbationConfig(**pert) if pert else None
    sim = data.get("simulation")
    simulation = None
    if sim is not None:
        simulation = SimulationConfig(float(sim.get("horizon_s", 1.0)), float(sim.get("start_s", 0.0)),
                                      float(sim.get("offset_max_s", 10e-3)), float(sim.get("drift_max_ppm", 20.0)) * 1e-6,
                                      bool(sim.get("residence_in_local_time", False)))
        if simulation.horizon <= 0 or simulation.drift_max < 0 or simulation.offset_max < 0:
            raise ConfigError("simulation horizon must be positive and clock bounds non-negative")
    out = data.get("output", {})
    num_slots = int(c.get("num_slots", 10))
    slot_duration = float(c.get("slot_duration_s", 10.0))
    if num_slots < 1 or slot_duration <= 0:
        raise ConfigError("num_slots must be >= 1 and slot_duration_s > 0")
    k = int(data.get("k", 5))
    if k < 1:
        raise ConfigError("k must be >= 1")
    mfb = node.get("max_frame_bytes")
    return ExperimentConfig(
        name=str(data.get("name", "experiment")), shell=shell, isl=isl, num_slots=num_slots,
        slot_duration=slot_duration, traffic=traffic, k=k, node_params=node_params,
        max_frame_bytes=int(mfb) if mfb is not None else None,
        enable_path_continuity=bool(sched.get("enable_path_continuity", True)), layer_cap=layer_cap,
        algorithms=algorithms, perturbation=perturbation, simulation=simulation, seeds=seeds,
        output_dir=str(out.get("dir", "results")), svg=bool(out.get("svg", False)),
    )


def read_config_dict(path) -> Dict[str, Any]:
    """Parsed TOML of ``path``; OSError propagates so callers can tell I/O from bad content."""
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    return config_from_dict(read_config_dict(path))


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return config_from_dict(PRESETS[name])
