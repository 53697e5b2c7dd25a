"""Report persistence: delimited series, JSON manifests and rendered figures.

CSV and JSON outputs are byte-deterministic for a fixed configuration and
seed: floats are formatted with %.17g, JSON keys are sorted, and no
timestamps are embedded.  Figures are rendered headlessly next to the data
files; they are a convenience view, not part of the determinism contract.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "fmt",
    "write_csv",
    "write_manifest",
    "emit_plotdata",
    "render_decay_figure",
    "render_table_figure",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def write_csv(path: Path, header: list[str], columns: list) -> Path:
    """Write columns (equal-length sequences) as a comma-separated table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_manifest(path: Path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def emit_plotdata(outdir: Path, name: str, report) -> list[Path]:
    """Two-column (t, value) files, plus bound and ratio files when present."""
    outdir = Path(outdir)
    written = []
    times = np.asarray(report.times)
    bound = report.norms.get("bound")
    for label, series in report.norms.items():
        written.append(write_csv(outdir / f"{name}_{label}.csv",
                                 ["t", label], [times, series]))
    if bound is not None:
        primary = report.primary_series()
        ratio = np.asarray(primary) / np.maximum(np.asarray(bound), 1e-300)
        written.append(write_csv(outdir / f"{name}_ratio.csv",
                                 ["t", "norm_over_bound"], [times, ratio]))
    return written


def emit_fit_residuals(outdir: Path, name: str, times, values,
                       slope: float, window: tuple[float, float],
                       algebraic: bool = True) -> Path:
    """Residuals of the log fit, with an in-window marker column."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    x = np.log1p(times) if algebraic else times
    mask = (times >= window[0]) & (times <= window[1]) & (values > 0)
    xin, yin = x[mask], np.log(values[mask])
    intercept = float(np.mean(yin - slope * xin))
    resid = np.where(values > 0, np.log(np.maximum(values, 1e-300)) - (slope * x + intercept), np.nan)
    return write_csv(Path(outdir) / f"{name}_fit_residuals.csv",
                     ["t", "residual", "in_window"],
                     [times, resid, mask.astype(int)])


def render_decay_figure(path: Path, report, title: str, logx: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    times = np.asarray(report.times)
    for label, series in report.norms.items():
        style = "--" if label == "bound" else "-"
        ax.plot(times, np.maximum(np.asarray(series, dtype=float), 1e-300), style, label=label)
    ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("squared norm")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_table_figure(path: Path, rows: list[dict], xkey: str, ykey: str,
                        title: str, reference: float | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    xs = [r[xkey] for r in rows]
    ys = [r[ykey] for r in rows]
    ax.plot(xs, ys, "o-")
    if reference is not None:
        ax.axhline(reference, color="gray", ls="--", lw=1)
    ax.set_xlabel(xkey)
    ax.set_ylabel(ykey)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
