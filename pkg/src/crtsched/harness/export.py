"""CSV and JSON export of a :class:`MetricsReport`.

``metrics.csv`` has one row per cell, sorted by (sweep_param, n_flows,
deadline, algo, seed), with columns ``METRICS_COLUMNS``. Floats are written
with ``repr`` so a round trip is exact. ``metrics.json`` carries the same
cells plus the overlap histograms, per-slot rescheduling counts, normalized
delays and any verifier failures.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import List

from ..exceptions import ArtifactIOError, InvalidParameterError
from .metrics import CellMetrics, MetricsReport

METRICS_COLUMNS = ("algo", "seed", "sweep_param", "n_flows", "success_rate", "max_overlap",
                   "p50_jitter_s", "p99_jitter_s", "resched_mean", "wall_time_s")
REPORT_FORMAT = "crtsched.metrics/1"


def _num(x):
    return "" if isinstance(x, float) and math.isnan(x) else repr(x) if isinstance(x, float) else x


def write_metrics_csv(report: MetricsReport, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_COLUMNS)
            for c in report.sorted_cells():
                row = c.row()
                w.writerow([_num(row[k]) for k in METRICS_COLUMNS])
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_metrics_csv(path) -> List[dict]:
    """Rows of ``metrics.csv`` with numeric columns parsed; blank jitter cells become NaN."""
    ints = {"seed", "n_flows", "max_overlap"}
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    out = []
    for r in rows:
        d = {}
        for k in METRICS_COLUMNS:
            v = r[k]
            if k in ("algo", "sweep_param"):
                d[k] = v
            elif k in ints:
                d[k] = int(v)
            else:
                d[k] = float(v) if v != "" else float("nan")
        out.append(d)
    return out


def _clean(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "format": REPORT_FORMAT,
        "name": report.name,
        "cells": [_clean(c.to_dict()) for c in report.sorted_cells()],
        "failures": [{"cell": list(key), "violations": list(v)} for key, v in report.failures],
    }


def report_from_dict(data: dict) -> MetricsReport:
    if data.get("format") != REPORT_FORMAT:
        raise InvalidParameterError(f"not a metrics document: format={data.get('format')!r}")
    return MetricsReport(data["name"], [CellMetrics.from_dict(c) for c in data["cells"]],
                         [(tuple(f["cell"]), list(f["violations"])) for f in data["failures"]])


def write_report_json(report: MetricsReport, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(report_to_dict(report), fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_report_json(path) -> MetricsReport:
    try:
        with open(path) as fh:
            return report_from_dict(json.load(fh))
    except OSError as exc:
        raise ArtifactIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def export(report: MetricsReport, format: str, path) -> Path:
    """Write ``report`` as ``csv`` or ``json`` to ``path``."""
    path = Path(path)
    if format == "csv":
        write_metrics_csv(report, path)
    elif format == "json":
        write_report_json(report, path)
    else:
        raise InvalidParameterError(f"format must be 'csv' or 'json', got {format!r}")
    return path
