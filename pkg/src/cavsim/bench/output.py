"""CSV and gnuplot emission for comparison reports.

Floats are written with :func:`repr`, the shortest text that parses back to
the same double, so a report survives a CSV round trip bit for bit.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile

from .scenario import COLUMNS, ComparisonReport

_INT_COLUMNS = {"n_max"}
_STR_COLUMNS = {"model", "port", "error_code"}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _atomic_write(path, text: str):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def csv_text(report: ComparisonReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = report.columns
    w.writerow(cols)
    for r in report.rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def emit_csv(report: ComparisonReport, path) -> None:
    """Write the report atomically (temporary file, then rename).

    Raises ``OSError`` if the destination cannot be written.
    """
    _atomic_write(path, csv_text(report))


def read_csv(path) -> tuple[str, list]:
    """Parse a CSV written by :func:`emit_csv`; returns ``(observable, rows)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        obs = next((k for k, cols in COLUMNS.items() if cols == header), None)
        if obs is None:
            raise ValueError(f"unrecognized header {header}")
        rows = []
        for rec in reader:
            row = {}
            for c, v in zip(header, rec):
                if c in _STR_COLUMNS:
                    row[c] = v
                elif c in _INT_COLUMNS:
                    row[c] = int(v) if v else ""
                else:
                    row[c] = float(v)
            rows.append(row)
    return obs, rows


# ---------------------------------------------------------------------------
# plot scripts

_MODEL_STYLE = {"analytic": "lc rgb '#1f4e9c' lw 2", "reduced": "lc rgb '#2a9d3f' dt 3 lw 2",
                "full": "lc rgb '#c0392b' dt 2 lw 2"}


def _panels(report: ComparisonReport):
    """``(title, filter column values, x column, y column)`` for every panel."""
    obs = report.observable
    ports = list(dict.fromkeys(r["port"] for r in report.rows))
    if obs == "flux":
        return 1, len(ports), [(f"{q} flux", None, q, 1, 6) for q in ports]
    sweep = list(dict.fromkeys(r["sweep_value"] for r in report.rows))
    panels = [(f"{q} at {x:.4g}", x, q, 4, 5) for x in sweep for q in ports]
    return len(sweep), len(ports), panels


def plot_script(report: ComparisonReport, csv_name: str) -> str:
    nrows, ncols, panels = _panels(report)
    xlabel = {"flux": "sweep value", "spectrum": "omega", "g2": "tau"}[report.observable]
    ylabel = {"flux": "photon flux", "spectrum": "S_incoh", "g2": "g2"}[report.observable]
    lines = [
        "# gnuplot script",
        f"# data: {csv_name}",
        "set datafile separator ','",
        "set terminal pngcairo size %d,%d" % (420 * max(ncols, 1), 300 * max(nrows, 1)),
        f"set output '{os.path.splitext(csv_name)[0]}.png'",
        f"set multiplot layout {max(nrows, 1)},{max(ncols, 1)}",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    for title, x, port, xc, yc in panels:
        lines.append(f"set title '{title}'")
        plots = []
        for m in report.models:
            cond = f'strcol(2) eq "{m}" && strcol(3) eq "{port}"'
            if x is not None:
                cond += f" && $1 == {x!r}"
            plots.append(f"'{csv_name}' every ::1 using {xc}:({cond} ? ${yc} : NaN) with lines "
                         f"{_MODEL_STYLE.get(m, '')} title '{m}'")
        lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def emit_plot_script(report: ComparisonReport, path, csv_path) -> None:
    """Write a standalone gnuplot script reading ``csv_path``."""
    folder = os.path.dirname(os.path.abspath(os.fspath(path)))
    rel = os.path.relpath(os.path.abspath(os.fspath(csv_path)), folder)
    _atomic_write(path, plot_script(report, rel))


def format_metrics(report: ComparisonReport) -> str:
    out = []
    for name, m in report.metrics.items():
        out.append(f"{name}: samples={m['samples']} max_abs={m['max_abs']:.3e} "
                   f"max_rel={m['max_rel']:.3e} l2={m['l2']:.3e}")
    for model, t in report.timings.items():
        out.append(f"time[{model}] = {t:.3f} s")
    nm = [v for v in report.n_max.values() if v is not None]
    if nm:
        out.append(f"n_max used: {min(nm)}..{max(nm)}")
    if report.failures:
        out.append(f"failed rows: {report.failures}")
    return "\n".join(out)


__all__ = ["emit_csv", "read_csv", "csv_text", "emit_plot_script", "plot_script", "format_metrics"]
