"""Matplotlib rendering of sweep tables and controller traces to SVG files."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PLOT_KINDS = ("rate_snr", "rate_f1", "rate_rae", "trace", "lambda")

style = {
    "font.family": "sans-serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "svg.fonttype": "none",     # keep text as text
    "svg.hashsalt": "adaradar",  # stable element ids across runs
}


def figsize(scale=1.0, ratio=None):
    ratio = ratio or (math.sqrt(5.0) - 1.0) / 2.0
    width = 6.0 * scale
    return width, width * ratio


def _num(v):
    try:
        f = float(v)
    except (TypeError, ValueError):
        return math.nan
    return f


def _series_label(row: Mapping) -> str:
    codec = row.get("codec", "spectral")
    if codec == "spectral":
        return f"spectral s={row.get('s')} M={row.get('M')}"
    if codec == "index_value":
        return f"index-value M={row.get('M')}"
    return str(codec)


def _save(fig, path, source_csv, title):
    meta = {"Title": title, "Creator": "adaradar", "Date": None}
    if source_csv:
        meta["Description"] = f"source: {source_csv}"
        fig.text(0.99, 0.005, f"data: {Path(source_csv).name}", ha="right", va="bottom", fontsize=6, alpha=0.6)
    fig.savefig(path, format="svg", metadata=meta, bbox_inches="tight")
    plt.close(fig)


def _rate_plot(rows, ykey, ylabel, path, source_csv):
    groups = defaultdict(list)
    for row in rows:
        x, y = _num(row.get("value_bpp")), _num(row.get(ykey))
        if math.isfinite(x) and x > 0 and not math.isnan(y):
            groups[_series_label(row)].append((x, y))
    if not groups:
        raise ValueError(f"no plottable rows for {ykey}")
    with plt.rc_context(style):
        fig, ax = plt.subplots(figsize=figsize(0.8))
        for label in sorted(groups):
            agg = defaultdict(list)
            for x, y in groups[label]:
                agg[x].append(y if math.isfinite(y) else 200.0)
            xs = sorted(agg)
            ax.plot(xs, [sum(agg[x]) / len(agg[x]) for x in xs], "o-", label=label)
        ax.set_xscale("log")
        ax.set_xlabel("bit rate [bpp]")
        ax.set_ylabel(ylabel)
        ax.legend(loc="best")
        _save(fig, path, source_csv, f"{ylabel} vs bit rate")


def _trace_plot(rows, path, source_csv):
    t = [_num(r["t"]) for r in rows]
    with plt.rc_context(style):
        fig, ax = plt.subplots(figsize=figsize(0.9, 0.45))
        ax.plot(t, [_num(r["r"]) for r in rows], "-", color="C0", label="pruning ratio $r_t$")
        ax.set_xlabel("frame")
        ax.set_ylabel("pruning ratio")
        ax2 = ax.twinx()
        ax2.plot(t, [_num(r["p"]) for r in rows], "-", color="C1", alpha=0.7, label="confidence $p_t$")
        ax2.set_ylabel("confidence")
        ax2.set_ylim(0, 1.05)
        ax2.grid(False)
        handles = ax.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
        ax.legend(handles, [h.get_label() for h in handles], loc="lower right")
        _save(fig, path, source_csv, "controller trace")


def _lambda_plot(rows, path, source_csv):
    lam = [_num(r["lam"]) for r in rows]
    with plt.rc_context(style):
        fig, ax = plt.subplots(figsize=figsize(0.7))
        ax.plot(lam, [_num(r["mean_r"]) for r in rows], "o-", label="mean pruning ratio")
        if any(x <= 0 for x in lam):
            ax.set_xscale("symlog")
        else:
            ax.set_xscale("log")
        ax.set_xlabel(r"penalty weight $\lambda$")
        ax.set_ylabel("mean pruning ratio")
        ax.legend(loc="upper left")
        _save(fig, path, source_csv, "lambda sweep")


def emit_plots(rows: Sequence[Mapping], kind: str, path, source_csv=None):
    """Render ``rows`` (dicts, e.g. read back from a CSV) to an SVG at ``path``."""
    rows = list(rows)
    if not rows:
        raise ValueError("cannot plot an empty table")
    if kind == "rate_snr":
        _rate_plot(rows, "snr_db", "SNR [dB]", path, source_csv)
    elif kind == "rate_f1":
        _rate_plot(rows, "f1", "F1", path, source_csv)
    elif kind == "rate_rae":
        _rate_plot(rows, "rae_mean", "mean RAE", path, source_csv)
    elif kind == "trace":
        _trace_plot(rows, path, source_csv)
    elif kind == "lambda":
        _lambda_plot(rows, path, source_csv)
    else:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    return Path(path)
