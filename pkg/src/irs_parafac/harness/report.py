"""Flat-file output: result CSVs, run manifest, figures.

Result CSV columns (UTF-8, comma separated, one header row)::

    algorithm, snr_db, nmse, nmse_db, iterations_median, nonconverged_frac,
    seed, nmse_per_block, iterations_mean, grid, grid_value, status

Empty cells mean "not applicable" (e.g. iteration counts of LS/KRF). Floats
are written with ``repr`` so they parse back bit-exactly.

Complexity CSV columns::

    algorithm, M, Q, N, K, rank, als_iter, order, order_with_ls
"""

import csv
from dataclasses import fields
import json
from pathlib import Path
import platform

import numpy as np

from .. import __version__
from ..errors import IrsParafacError
from .experiments import ComplexityRow, ResultRow, RunReport

RESULT_COLUMNS = [f.name for f in fields(ResultRow)]
COMPLEXITY_COLUMNS = [f.name for f in fields(ComplexityRow)]

_INT_FIELDS = {"seed", "grid_value", "M", "Q", "N", "K", "rank"}
_STR_FIELDS = {"algorithm", "grid", "status"}


class OutputError(IrsParafacError, OSError):
    pass


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse(name: str, text: str):
    if name in _STR_FIELDS:
        return text
    if text == "":
        return None
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def write_csv(path, columns, records) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_cell(getattr(rec, c)) for c in columns])
    return path


def read_results_csv(path) -> list[ResultRow]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [ResultRow(**{k: _parse(k, v) for k, v in row.items()}) for row in csv.DictReader(fh)]


def read_complexity_csv(path) -> list[ComplexityRow]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [ComplexityRow(**{k: _parse(k, v) for k, v in row.items()})
                for row in csv.DictReader(fh)]


def _stem(report: RunReport) -> str:
    stem = report.experiment.replace("-", "_")
    if report.experiment == "convergence":
        grids = {r.grid for r in report.rows if r.grid}
        if len(grids) == 1:
            stem += "_" + grids.pop()
    return stem


def _json_safe(x):
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def manifest(report: RunReport, files) -> dict:
    return _json_safe({
        "experiment": report.experiment,
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": report.config.seed,
        "config": report.config.to_dict(),
        "files": [Path(f).name for f in files],
        "skipped": report.skipped,
        "max_als_increase": report.max_als_increase,
        "wall_clock_s": report.wall_clock_s,
    })


def emit_results(report: RunReport, out_dir, plots: bool = True) -> list[Path]:
    """Write CSV, optional SVG figures and a JSON manifest into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        stem = _stem(report)
        files = []
        if report.experiment == "complexity":
            files.append(write_csv(out / f"{stem}.csv", COMPLEXITY_COLUMNS, report.complexity))
        else:
            files.append(write_csv(out / f"{stem}.csv", RESULT_COLUMNS, report.rows))
        if plots:
            from .plotting import plot_report

            files.extend(plot_report(report, out, stem))
        man = out / f"{stem}_manifest.json"
        man.write_text(json.dumps(manifest(report, files + [man]), indent=2) + "\n",
                       encoding="utf-8")
        files.append(man)
    except OSError as exc:
        raise OutputError(f"cannot write results to {out}: {exc}") from exc
    return files


def format_table(report: RunReport) -> str:
    """Plain-text summary for the terminal."""
    if report.experiment == "complexity":
        lines = [f"{'alg':<4} {'N':>5} {'order':>14} {'with LS':>14}"]
        for r in report.complexity:
            lines.append(f"{r.algorithm:<4} {r.N:>5} {r.order:>14.6g} {r.order_with_ls:>14.6g}")
        return "\n".join(lines)
    lines = [f"{'alg':<4} {'grid':>10} {'snr_db':>7} {'nmse_db':>9} {'it_med':>7} {'nonconv':>8}"]
    for r in report.rows:
        g = "" if r.grid_value is None else f"{r.grid_value}"
        if r.status != "ok":
            lines.append(f"{r.algorithm:<4} {g:>10} {'':>7} {r.status:>9}")
            continue
        it = "" if r.iterations_median is None else f"{r.iterations_median:g}"
        nc = "" if r.nonconverged_frac is None else f"{r.nonconverged_frac:.3f}"
        lines.append(f"{r.algorithm:<4} {g:>10} {r.snr_db:>7g} {r.nmse_db:>9.3f} {it:>7} {nc:>8}")
    return "\n".join(lines)


__all__ = [
    "COMPLEXITY_COLUMNS",
    "RESULT_COLUMNS",
    "OutputError",
    "emit_results",
    "format_table",
    "manifest",
    "read_complexity_csv",
    "read_results_csv",
    "write_csv",
]
