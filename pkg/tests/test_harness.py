import copy
import json

import numpy as np
import pytest
from sklearn.base import clone

from crtsched.estimators import CrtFastScheduler, NotFittedError, SpfScheduler, make_scheduler
from crtsched.exceptions import ArtifactIOError, ConfigError, InvalidParameterError
from crtsched.harness import cli
from crtsched.harness.config import PRESETS, config_from_dict, load_config, preset
from crtsched.harness.export import export, read_metrics_csv, read_report_json, report_from_dict, report_to_dict
from crtsched.harness.metrics import overlap_cdf, rescheduling_count
from crtsched.harness.runner import run_experiment
from crtsched.instances import snapshot_from_edges
from crtsched.kpaths import candidate_sets
from crtsched.scheduler import crt_fast

from conftest import MS, flow

SMALL = {
    "name": "small",
    "preset": "iridium-default",
    "seeds": [0],
    "algorithms": ["crt_fast", "spf", "lag", "strict"],
    "constellation": {"num_slots": 2},
    "traffic": {"n_flows": [40]},
    "simulation": {"horizon_s": 0.1},
}


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    cfg = config_from_dict(SMALL)
    return cfg, out, run_experiment(cfg, out_dir=out, keep_schedules=True)


# config

def test_presets_load():
    for name in PRESETS:
        cfg = preset(name)
        assert cfg.name == name and cfg.seeds and cfg.algorithms
    assert preset("handover-400").perturbation is not None
    assert preset("iridium-default").traffic.n_flows[0] == 200


@pytest.mark.parametrize("patch", [
    {"algorithms": []},
    {"algorithms": ["dijkstra"]},
    {"bogus": 1},
    {"traffic": {"n_flows": [-1]}},
    {"traffic": {"n_flows": []}},
    {"traffic": {"colour": "red"}},
    {"k": 0},
    {"preset": "nope"},
])
def test_config_errors(patch):
    with pytest.raises(ConfigError):
        config_from_dict({**SMALL, **patch})


def test_config_round_trip_and_toml(tmp_path):
    cfg = config_from_dict(SMALL)
    assert config_from_dict(cfg.to_dict()) == cfg
    p = tmp_path / "c.toml"
    p.write_text('preset = "iridium-default"\nseeds = [3]\n[traffic]\nn_flows = [10]\n')
    c = load_config(p)
    assert c.seeds == [3] and c.traffic.n_flows == [10]
    p.write_text("seeds = [")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.toml")


# metrics

def test_overlap_cdf_examples():
    assert overlap_cdf([1, 1, 2, 3]) == [(1, 0.5), (2, 0.75), (3, 1.0)]
    assert overlap_cdf({(0, 1): 1, (1, 2): 1}) == [(1, 1.0)]
    assert overlap_cdf([]) == []


def test_rescheduling_count_sees_perturbation():
    s0 = snapshot_from_edges({(0, 1): MS, (1, 3): MS, (0, 2): 2 * MS, (2, 3): 2 * MS})
    s1 = snapshot_from_edges({(0, 2): 2 * MS, (2, 3): 2 * MS}, slot=1)
    flows = [flow(0, 0, 3)]
    s = crt_fast([s0, s1], flows, candidate_sets([s0, s1], flows, 2))
    assert rescheduling_count(s, 1) >= 1
    for bad in (0, 2):
        with pytest.raises(InvalidParameterError):
            rescheduling_count(s, bad)


# runner and export

def test_run_experiment_small(small_run):
    cfg, out, report = small_run
    assert report.ok and len(report.cells) == 4
    for c in report.cells:
        assert 0 <= c.success_rate <= 1
        assert all(v <= 1 + 1e-9 for v in c.normalized_delay.values())
        assert len(c.rescheduled_per_slot) == 1
    for name in ("metrics.csv", "metrics.json", "overlap_cdf.csv", "manifest.json"):
        assert (out / name).exists()
    assert len(list((out / "schedules").glob("*.json"))) == 4
    assert len(list(out.glob("packets_*.csv"))) == 4
    man = json.loads((out / "manifest.json").read_text())
    assert man["seeds"] == [0] and "metrics_sha256" in man


def test_export_round_trips(small_run, tmp_path):
    _, _, report = small_run
    again = report_from_dict(json.loads(json.dumps(report_to_dict(report))))
    assert [c.to_dict() for c in again.sorted_cells()] == [c.to_dict() for c in report.sorted_cells()]
    export(report, "json", tmp_path / "m.json")
    assert [c.to_dict() for c in read_report_json(tmp_path / "m.json").sorted_cells()] == \
        [c.to_dict() for c in report.sorted_cells()]
    export(report, "csv", tmp_path / "m.csv")
    rows = read_metrics_csv(tmp_path / "m.csv")
    assert len(rows) == 4
    assert {r["algo"] for r in rows} == set(SMALL["algorithms"])
    with pytest.raises(ArtifactIOError):
        export(report, "csv", tmp_path / "no" / "such" / "dir" / "m.csv")
    with pytest.raises(ValueError):
        export(report, "xml", tmp_path / "m.xml")


def test_metrics_deterministic(small_run, tmp_path):
    cfg, out, _ = small_run
    run_experiment(cfg, out_dir=tmp_path)

    def strip(path):
        return [{k: v for k, v in r.items() if k != "wall_time_s"} for r in read_metrics_csv(path)]
    assert strip(out / "metrics.csv") == strip(tmp_path / "metrics.csv")
    assert json.loads((out / "manifest.json").read_text())["metrics_sha256"] == \
        json.loads((tmp_path / "manifest.json").read_text())["metrics_sha256"]


# estimators

def test_estimators(iridium_snaps):
    from crtsched.traffic import IRIDIUM_POLICY, generate_flows
    snaps = iridium_snaps[:2]
    flows = generate_flows(50, snaps[0], IRIDIUM_POLICY, seed=2)
    est = CrtFastScheduler(k=3)
    with pytest.raises(NotFittedError):
        est.predict(flows)
    est.fit(flows, snaps)
    pred = est.predict(flows)
    assert pred.dtype == np.int8 and pred.sum() == est.schedule_.j1
    assert est.score(flows) == pytest.approx(est.schedule_.success_rate())
    assert est.layers_ == est.schedule_.layers
    c = clone(est).set_params(k=1)
    assert c.get_params()["k"] == 1 and not hasattr(c, "schedule_")
    assert isinstance(make_scheduler("spf", k=2), SpfScheduler)
    with pytest.raises(ValueError):
        make_scheduler("nope")
    with pytest.raises(ValueError):
        est.fit(flows, [])


# command line

ARGS = ["--preset", "iridium-default", "--seed", "0"]


def _cfg_file(tmp_path, **extra):
    p = tmp_path / "c.toml"
    body = 'preset = "iridium-default"\nseeds = [0]\n[constellation]\nnum_slots = 2\n[traffic]\nn_flows = [30]\n'
    p.write_text(body + "".join(extra.values()))
    return str(p)


def test_cli_schedule_verify_simulate(tmp_path, capsys):
    cfg = _cfg_file(tmp_path)
    out = tmp_path / "o"
    assert cli.main(["schedule", "--config", cfg, "--out", str(out), "--algo", "crt_fast,spf"]) == 0
    files = ["--topology", str(out / "topology.json"), "--flows-file", str(out / "flows.csv")]
    sched = str(out / "schedule_crt_fast.json")
    assert cli.main(["verify", "--schedule", sched, *files]) == 0
    assert cli.main(["simulate", "--config", cfg, "--out", str(out), "--schedule", sched, "--horizon", "0.05",
                     *files]) == 0
    assert (out / "packets_file.csv").exists()
    assert cli.main(["gen-topology", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "topology_s0.json").exists()
    assert cli.main(["sweep", "--config", cfg, "--out", str(out / "sw"), "--algo", "spf"]) == 0
    assert (out / "sw" / "metrics.csv").exists()

    # a tampered schedule is a verifier violation
    data = json.loads(open(sched).read())
    tampered = copy.deepcopy(data)
    _tamper(tampered)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(tampered))
    assert cli.main(["verify", "--schedule", str(bad), *files]) == 2


def _tamper(doc):
    # shorten the first hold of the first admitted flow
    for e in doc["flows"]:
        for holds in e["delta_t_s"].values() if e["y"] else ():
            for v in holds:
                holds[v] -= 1e-4
                return
    raise AssertionError("no hold to tamper with")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("algorithms = []\n")
    assert cli.main(["sweep", "--config", str(bad)]) == 1
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.toml")]) == 3
    assert cli.main(["verify", "--schedule", str(tmp_path / "x.json"), "--topology", str(tmp_path / "t.json"),
                     "--flows-file", str(tmp_path / "f.csv")]) == 3
    assert cli.main(["schedule", *ARGS, "--algo", "nope"]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["gen-topology", "--config", _cfg_file(tmp_path), "--out", str(blocker / "sub")]) == 3
