"""Experiment pipeline: topology, flows, candidates, schedulers, verification, simulation, metrics."""
from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .. import __version__
from ..constellation import TopologySnapshot, build_constellation, perturb_sequence, snapshot_sequence
from ..exceptions import ArtifactIOError
from ..kpaths import candidate_sets
from ..oracle import verify_schedule
from ..scheduler import ALGORITHMS, SchedulerConfig
from ..simulator import ClockModel, save_packets, simulate_run
from ..traffic import TtFlow, generate_flows, with_uniform_deadline
from .config import ExperimentConfig
from .export import write_metrics_csv, write_report_json
from .metrics import MetricsReport, cell_metrics, overlap_cdf

log = logging.getLogger(__name__)


def topology_for(config: ExperimentConfig, seed: int) -> List[TopologySnapshot]:
    """Snapshot sequence of one seed; perturbations are drawn per (perturbation seed, run seed, slot)."""
    snaps = snapshot_sequence(build_constellation(config.shell, config.isl), config.num_slots,
                              config.slot_duration)
    if config.perturbation is not None:
        s = int(np.random.SeedSequence([config.perturbation.rng_seed, seed]).generate_state(1)[0])
        snaps = perturb_sequence(snaps, replace(config.perturbation, rng_seed=s))
    return snaps


def flows_for(config: ExperimentConfig, snapshots: Sequence[TopologySnapshot], n: int, seed: int) -> List[TtFlow]:
    t = config.traffic
    return generate_flows(n, snapshots[0], t.policy, t.frame_bytes, t.period, seed=seed)


def scheduler_config(config: ExperimentConfig) -> SchedulerConfig:
    return SchedulerConfig(k=config.k, node_params=config.node_params,
                           enable_path_continuity=config.enable_path_continuity, layer_cap=config.layer_cap,
                           max_frame_bytes=config.max_frame_bytes)


@dataclass
class Cell:
    algo: str
    seed: int
    n_flows: int
    deadline: Optional[float]

    @property
    def tag(self) -> str:
        d = "" if self.deadline is None else f"_d{round(self.deadline * 1e6)}us"
        return f"{self.algo}_s{self.seed}_n{self.n_flows}{d}"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_cdf(report: MetricsReport, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write("algo,seed,sweep_param,sweep_value,n_e,cum_fraction\n")
        for c in report.sorted_cells():
            x = c.deadline_s if c.sweep_param == "deadline_s" else c.n_flows
            degrees = [n for n, cnt in c.overlap_histogram.items() for _ in range(cnt)]
            for n, frac in overlap_cdf(degrees):
                fh.write(f"{c.algo},{c.seed},{c.sweep_param},{x!r},{n},{frac!r}\n")


def run_experiment(config: ExperimentConfig, out_dir=None, write: bool = True,
                   keep_schedules: bool = False) -> MetricsReport:
    """Run every (seed, n_flows, deadline, algorithm) cell of ``config``.

    Each schedule must pass :func:`verify_schedule`; a failing cell is listed
    in ``report.failures`` and contributes no metrics. With ``write`` the
    artifacts go to ``out_dir`` (default ``config.output_dir``). With
    ``keep_schedules`` the report's ``schedules`` attribute maps cell tags to
    ``(schedule, snapshots, flows)``.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    if write:
        try:
            (out / "schedules").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ArtifactIOError(f"cannot create {out}: {exc.strerror or exc}") from exc
    report = MetricsReport(config.name)
    report.schedules = {}
    sweep_param = "deadline_s" if config.traffic.deadlines is not None else "n_flows"
    sconf = scheduler_config(config)
    sim = config.simulation
    for seed in config.seeds:
        snaps = topology_for(config, seed)
        clocks = ClockModel.random(snaps[0].nodes, seed, sim.offset_max, sim.drift_max) if sim else None
        for n in config.traffic.n_flows:
            base = flows_for(config, snaps, n, seed)
            cands = candidate_sets(snaps, base, config.k)
            for deadline in (config.traffic.deadlines or [None]):
                flows = base if deadline is None else with_uniform_deadline(base, deadline)
                for algo in config.algorithms:
                    cell = Cell(algo, seed, n, deadline)
                    t0 = time.perf_counter()
                    sched = ALGORITHMS[algo](snaps, flows, cands, sconf)
                    wall = time.perf_counter() - t0
                    bad = verify_schedule(sched, snaps, flows)
                    if bad:
                        log.error("cell %s failed verification: %s", cell.tag, bad[0])
                        report.failures.append(((sweep_param, n, deadline, algo, seed), [str(v) for v in bad]))
                        continue
                    records = None
                    if sim is not None:
                        records = simulate_run(sched, snaps, flows, clocks, horizon=sim.horizon, seed=seed,
                                               start=snaps[0].sample_time + sim.start,
                                               residence_in_local_time=sim.residence_in_local_time,
                                               record_hops=False)
                    report.cells.append(cell_metrics(sched, flows, seed=seed, sweep_param=sweep_param,
                                                     deadline=deadline, records=records, wall_time=wall))
                    if keep_schedules:
                        report.schedules[cell.tag] = (sched, snaps, flows)
                    if write:
                        try:
                            sched.save(out / "schedules" / f"{cell.tag}.json")
                            if records is not None:
                                save_packets(out / f"packets_{cell.tag}.csv", records)
                        except OSError as exc:
                            raise ArtifactIOError(f"cannot write results for {cell.tag} under {out}: {exc}") from exc
                    log.info("%s: success %.3f, max overlap %d, %.2fs", cell.tag, sched.success_rate(),
                             sched.max_overlap(), wall)
    if write:
        write_outputs(report, config, out)
    return report


def write_outputs(report: MetricsReport, config: ExperimentConfig, out: Path) -> None:
    write_metrics_csv(report, out / "metrics.csv")
    write_report_json(report, out / "metrics.json")
    try:
        _write_cdf(report, out / "overlap_cdf.csv")
        if config.svg:
            from .svg import write_charts
            write_charts(report, out / "plots")
        # wall times differ run to run, so the metrics files are fingerprinted without them
        artifacts = {}
        for p in sorted(out.rglob("*")):
            if p.is_file() and p.name not in ("manifest.json", "metrics.csv", "metrics.json"):
                artifacts[p.relative_to(out).as_posix()] = _sha256(p)
        stable = [{k: v for k, v in c.to_dict().items() if k != "wall_time_s"} for c in report.sorted_cells()]
        manifest = {
            "name": config.name,
            "config": config.to_dict(),
            "seeds": list(config.seeds),
            "versions": {"crtsched": __version__, "python": platform.python_version(),
                         "numpy": np.__version__},
            "artifacts": artifacts,
            "metrics_sha256": hashlib.sha256(json.dumps(stable, sort_keys=True).encode()).hexdigest(),
            "failures": len(report.failures),
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write outputs under {out}: {exc}") from exc
