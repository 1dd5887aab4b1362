"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 verifier violation, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..constellation import load_topology, save_topology
from ..exceptions import ArtifactIOError, ConfigError, CrtError
from ..oracle import verify_schedule
from ..scheduler import ALGORITHMS, Schedule
from ..simulator import ClockModel, envelope_violations, measure_jitter, save_packets, simulate_run
from ..traffic import load_flows, save_flows
from .config import PRESETS, ExperimentConfig, SimulationConfig, config_from_dict, read_config_dict
from .metrics import cell_metrics
from .runner import flows_for, run_experiment, scheduler_config, topology_for

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("crtsched")


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="TOML experiment file")
    parser.add_argument("--preset", default=d, choices=sorted(PRESETS), help="built-in experiment")
    parser.add_argument("--seed", type=int, default=d, help="run only this seed")
    parser.add_argument("--out", default=d, help="output directory")
    parser.add_argument("--algo", default=d, help="comma-separated algorithms")
    parser.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crtsched", description="Collision-tolerant TT flow scheduling on LEO ISLs")
    _common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-topology", help="write the snapshot sequence of one seed")
    _common(s, suppress=True)

    s = sub.add_parser("schedule", help="schedule one flow set and write schedules, flows and topology")
    _common(s, suppress=True)
    s.add_argument("--flows", type=int, help="number of flows (default: first sweep point)")

    s = sub.add_parser("simulate", help="replay a schedule in the event simulator")
    _common(s, suppress=True)
    s.add_argument("--flows", type=int, help="number of flows when scheduling from the config")
    s.add_argument("--schedule", help="schedule JSON (with --topology and --flows-file)")
    s.add_argument("--topology", help="topology JSON")
    s.add_argument("--flows-file", help="flows CSV")
    s.add_argument("--horizon", type=float, help="simulated seconds")

    s = sub.add_parser("sweep", help="run every cell of the experiment")
    _common(s, suppress=True)

    s = sub.add_parser("verify", help="check a schedule against its topology and flows")
    _common(s, suppress=True)
    s.add_argument("--schedule", required=True)
    s.add_argument("--topology", required=True)
    s.add_argument("--flows-file", required=True)
    return p


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        try:
            data = read_config_dict(args.config)
        except OSError as exc:
            raise ArtifactIOError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
        if args.preset:
            data = {"preset": args.preset, **data}
    else:
        data = {"preset": args.preset or "iridium-default"}
    if args.seed is not None:
        data["seeds"] = [args.seed]
    if args.algo:
        data["algorithms"] = [a.strip() for a in args.algo.split(",") if a.strip()]
    if args.out:
        data.setdefault("output", {})
        data["output"] = {**data["output"], "dir": args.out}
    return config_from_dict(data)


def _schedule_one(cfg: ExperimentConfig, n: Optional[int]):
    from ..kpaths import candidate_sets
    seed = cfg.seeds[0]
    snaps = topology_for(cfg, seed)
    flows = flows_for(cfg, snaps, n if n is not None else cfg.traffic.n_flows[0], seed)
    cands = candidate_sets(snaps, flows, cfg.k)
    sconf = scheduler_config(cfg)
    return seed, snaps, flows, {a: ALGORITHMS[a](snaps, flows, cands, sconf) for a in cfg.algorithms}


def _report_violations(name: str, bad) -> None:
    for v in bad[:20]:
        print(f"{name}: {v}", file=sys.stderr)
    if len(bad) > 20:
        print(f"{name}: ... {len(bad) - 20} more", file=sys.stderr)


def cmd_gen_topology(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in cfg.seeds:
        path = out / f"topology_s{seed}.json"
        save_topology(path, topology_for(cfg, seed), cfg.shell)
        print(path)
    return EXIT_OK


def cmd_schedule(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed, snaps, flows, scheds = _schedule_one(cfg, args.flows)
    save_topology(out / "topology.json", snaps, cfg.shell)
    save_flows(out / "flows.csv", flows)
    code = EXIT_OK
    for algo, sched in scheds.items():
        sched.save(out / f"schedule_{algo}.json")
        bad = verify_schedule(sched, snaps, flows)
        if bad:
            _report_violations(algo, bad)
            code = EXIT_VIOLATION
        print(f"{algo}: admitted {sched.j1}/{len(flows)} ({sched.success_rate():.3f}), "
              f"max overlap {sched.max_overlap()}")
    return code


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = cfg.simulation or SimulationConfig()
    horizon = args.horizon or sim.horizon
    seed = cfg.seeds[0]
    if args.schedule:
        if not (args.topology and args.flows_file):
            raise ConfigError("--schedule needs --topology and --flows-file")
        snaps = load_topology(args.topology)
        flows = load_flows(args.flows_file)
        scheds = {"file": Schedule.load_file(args.schedule, snaps, flows)}
    else:
        seed, snaps, flows, scheds = _schedule_one(cfg, args.flows)
    clocks = ClockModel.random(snaps[0].nodes, seed, sim.offset_max, sim.drift_max)
    code = EXIT_OK
    for name, sched in scheds.items():
        bad = verify_schedule(sched, snaps, flows)
        if bad:
            _report_violations(name, bad)
            code = EXIT_VIOLATION
            continue
        recs = simulate_run(sched, snaps, flows, clocks, horizon=horizon, seed=seed,
                            start=snaps[0].sample_time + sim.start,
                            residence_in_local_time=sim.residence_in_local_time)
        save_packets(out / f"packets_{name}.csv", recs)
        jit = measure_jitter(recs)
        env = envelope_violations(recs, sched)
        m = cell_metrics(sched, flows, seed=seed, sweep_param="n_flows", records=recs)
        summary = {
            "frames": len(recs),
            "flows": len(jit),
            "max_spread_s": max((j.spread for j in jit.values()), default=0.0),
            "p50_jitter_s": m.p50_jitter_s,
            "p99_jitter_s": m.p99_jitter_s,
            "envelope_violations": len(env),
        }
        with open(out / f"jitter_{name}.json", "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
        print(f"{name}: {summary['frames']} frames, max spread {summary['max_spread_s'] * 1e3:.4f} ms, "
              f"{len(env)} envelope violations")
        if env:
            code = EXIT_VIOLATION
    return code


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    report = run_experiment(cfg)
    for (algo, x), (mean, sd) in sorted(report.summary().items()):
        print(f"{algo:9s} {x!s:>8}  success {mean:.3f} ± {sd:.3f}")
    for key, bad in report.failures:
        _report_violations(str(key), bad)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_verify(args) -> int:
    snaps = load_topology(args.topology)
    flows = load_flows(args.flows_file)
    sched = Schedule.load_file(args.schedule, snaps, flows)
    bad = verify_schedule(sched, snaps, flows)
    if bad:
        _report_violations(args.schedule, bad)
        return EXIT_VIOLATION
    print(f"ok: {sched.j1} scheduled flows, no violations")
    return EXIT_OK


COMMANDS = {"gen-topology": cmd_gen_topology, "schedule": cmd_schedule, "simulate": cmd_simulate,
            "sweep": cmd_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CrtError, ValueError, KeyError) as exc:
        # malformed input files (schedule, topology, flows)
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
