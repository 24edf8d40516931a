"""SVG figures for the experiment reports.

Uses the non-interactive Agg backend and strips the SVG date stamp so that
re-running a seeded experiment rewrites the same bytes.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "legend.fontsize": 8,
    "lines.linewidth": 1.4,
    "lines.markersize": 5,
    "svg.hashsalt": "irs-parafac",
}

MARKERS = {"LS": "s", "KRF": "^", "ALS": "o"}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_nmse(report, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for alg in ("LS", "KRF", "ALS"):
            rows = [r for r in report.rows if r.algorithm == alg and np.isfinite(r.snr_db)]
            if rows:
                ax.plot([r.snr_db for r in rows], [r.nmse_db for r in rows],
                        marker=MARKERS[alg], label=alg)
        ax.set_xlabel("training SNR [dB]")
        ax.set_ylabel("NMSE [dB]")
        ax.legend()
        return _save(fig, Path(path))


def plot_iterations(report, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        grid = next((r.grid for r in report.rows if r.grid), "")
        label = {"path_products": "L1L2", "reflector_counts": "N"}.get(grid, grid)
        values = sorted({r.grid_value for r in report.rows if r.status == "ok"})
        for v in values:
            rows = [r for r in report.rows if r.grid_value == v and r.status == "ok"]
            ax.plot([r.snr_db for r in rows], [r.iterations_mean for r in rows],
                    marker="o", label=f"{label} = {v}")
        ax.set_xlabel("training SNR [dB]")
        ax.set_ylabel("ALS iterations (mean)")
        ax.set_ylim(bottom=0)
        if values:
            ax.legend()
        return _save(fig, Path(path))


def plot_complexity(report, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for alg in ("LS", "KRF", "ALS"):
            rows = [r for r in report.complexity if r.algorithm == alg]
            ax.semilogy([r.N for r in rows], [r.order_with_ls for r in rows],
                        marker=MARKERS[alg], label=alg + (" (incl. LS)" if alg != "LS" else ""))
        ax.set_xlabel("IRS elements N")
        ax.set_ylabel("complexity order [flops]")
        ax.legend()
        return _save(fig, Path(path))


def plot_traces(report, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for snr, traces in sorted(report.traces.items()):
            for trace in traces:
                ax.semilogy(np.arange(1, len(trace) + 1), np.maximum(trace, 1e-300),
                            label=f"{snr:g} dB")
        ax.set_xlabel("ALS iteration")
        ax.set_ylabel("normalized fit error e(i)")
        if report.traces:
            ax.legend()
        return _save(fig, Path(path))


def plot_report(report, out_dir, stem: str) -> list[Path]:
    out_dir = Path(out_dir)
    if report.experiment == "complexity":
        return [plot_complexity(report, out_dir / f"{stem}.svg")]
    if report.experiment == "convergence":
        return [plot_iterations(report, out_dir / f"{stem}.svg")]
    paths = [plot_nmse(report, out_dir / f"{stem}.svg")]
    if report.traces and report.experiment == "single-run":
        paths.append(plot_traces(report, out_dir / f"{stem}_als_trace.svg"))
    return paths
