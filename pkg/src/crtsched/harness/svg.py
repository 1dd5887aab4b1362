"""Self-contained SVG charts of a report (success rate vs sweep, overlap CDF)."""
from __future__ import annotations

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricsReport, overlap_cdf  # noqa: E402

# fixed salt and no date keep repeated renders byte-identical
_RC = {"svg.hashsalt": "crtsched", "svg.fonttype": "none"}
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def success_chart(report: MetricsReport, path) -> Path:
    summary = report.summary("success_rate")
    cells = report.sorted_cells()
    xlabel = "deadline (s)" if cells and cells[0].sweep_param == "deadline_s" else "number of flows"
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for algo in sorted({a for a, _ in summary}):
            xs = sorted(x for a, x in summary if a == algo)
            mean = [summary[(algo, x)][0] for x in xs]
            sd = [summary[(algo, x)][1] for x in xs]
            ax.errorbar(xs, mean, yerr=sd, marker="o", capsize=2, label=algo)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("success rate")
        ax.set_ylim(0, 1.02)
        ax.legend()
        fig.tight_layout()
        return _save(fig, Path(path))


def overlap_chart(report: MetricsReport, path) -> Path:
    """Overlap CDF per algorithm, pooled over seeds at the largest sweep point."""
    cells = report.sorted_cells()
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if cells:
            last = max(c.n_flows for c in cells)
            for algo in sorted({c.algo for c in cells}):
                degrees: List[int] = []
                for c in cells:
                    if c.algo == algo and c.n_flows == last:
                        degrees += [n for n, cnt in c.overlap_histogram.items() for _ in range(cnt)]
                pts = overlap_cdf(degrees)
                if pts:
                    ax.step([p[0] for p in pts], [p[1] for p in pts], where="post", label=algo)
            ax.legend()
        ax.set_xlabel("overlap degree n_e")
        ax.set_ylabel("fraction of used links")
        fig.tight_layout()
        return _save(fig, Path(path))


def write_charts(report: MetricsReport, out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [success_chart(report, out / "success_rate.svg"), overlap_chart(report, out / "overlap_cdf.svg")]
