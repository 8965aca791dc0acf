"""Render the simulation harness CSV outputs into figures.

The renderer only touches CSV text: metric rows
(experiment,sweep_name,sweep_value,metric,mean,std,trials,seed) become
line plots with one series per metric, and point-target rows
(kind,range_m,virtual_angle,amplitude) become an angle-range scatter
with truth and estimate overlays.  Lines starting with "#" are
comments.  The harness emits linear-scale numbers; every dB or log
conversion happens here.

Rendering is deterministic: fixed backend, fonts, sizes, colors, and
pinned PNG metadata, so identical inputs give byte-identical files.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "RenderError", "PRESETS", "preset_spec",
           "load_rows", "render"]


class RenderError(Exception):
    """Raised for unreadable, empty, or wrongly shaped CSV input."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: where the rows come from and how axes are drawn.

    kind "lines" plots mean vs sweep_value per series; "scatter" plots
    the angle-range point map.  y_scale is "linear", "log", or "db"
    (10*log10 applied to positive values).  series_keys name the CSV
    columns whose values split the rows into series; sweep_filter, if
    set, keeps only rows with that sweep_name (for mixed-sweep CSVs).
    """
    preset: str
    csv_path: str
    x_label: str
    y_label: str
    x_scale: str = "linear"
    y_scale: str = "linear"
    series_keys: tuple = ("metric",)
    sweep_filter: str | None = None
    kind: str = "lines"


_LINE_AXES = dict(series_keys=("metric",), kind="lines")

PRESETS = {
    "fig6": dict(x_label="pursuit iterations", y_label="NMSE (dB)",
                 y_scale="db", **_LINE_AXES),
    "fig7": dict(x_label="RU element spacing (wavelengths)",
                 y_label="NMSE (dB)", y_scale="db", **_LINE_AXES),
    "fig8": dict(x_label="codebooks per pilot frame",
                 y_label="NMSE (dB)", y_scale="db", **_LINE_AXES),
    "fig9": dict(x_label="downlink power (dBm)", y_label="NMSE (dB)",
                 y_scale="db", **_LINE_AXES),
    "fig10": dict(x_label="virtual angle", y_label="range (m)",
                  kind="scatter"),
    "fig11": dict(x_label="UT transmit power (dBm)",
                  y_label="Doppler phase MSE", y_scale="log", **_LINE_AXES),
    "fig12": dict(x_label="per-subcarrier SNR (dB)", y_label="uncoded BER",
                  y_scale="log", **_LINE_AXES),
    "ase": dict(x_label="downlink power (dBm)",
                y_label="spectral efficiency (bit/s/Hz)",
                sweep_filter="p_dl_dbm", **_LINE_AXES),
}


def preset_spec(preset, csv_path):
    if preset not in PRESETS:
        raise RenderError(f"unknown preset {preset!r}")
    return FigureSpec(preset=preset, csv_path=csv_path, **PRESETS[preset])


def load_rows(path):
    """CSV text -> (header columns, rows as column->string dicts).

    Skips "#" comment lines and blank lines; never modifies the file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise RenderError(f"{path}: no header row")
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise RenderError(f"{path}: row has {len(parts)} fields, "
                              f"header has {len(header)}")
        rows.append(dict(zip(header, parts)))
    if not rows:
        raise RenderError(f"{path}: no data rows")
    return header, rows


def _require(header, columns, path):
    missing = [c for c in columns if c not in header]
    if missing:
        raise RenderError(f"{path}: missing columns {missing}")


# fixed palette and marker cycle so series styling never depends on
# renderer state; series are styled in sorted-label order
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
_MARKERS = ("o", "s", "^", "v", "D", "x", "*", "P", "<", ">")

_RC = {
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110.0,
    "savefig.dpi": 110.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8.0,
    "lines.linewidth": 1.4,
    "lines.markersize": 5.0,
}

# pinned so the PNG text chunk does not track library versions
_METADATA = {"Software": "figures"}


def _line_series(spec, header, rows):
    _require(header, ("sweep_name", "sweep_value", "mean")
             + tuple(spec.series_keys), spec.csv_path)
    if spec.sweep_filter is not None:
        rows = [r for r in rows if r["sweep_name"] == spec.sweep_filter]
    series = {}
    for r in rows:
        label = "/".join(r[k] for k in spec.series_keys)
        series.setdefault(label, []).append(
            (float(r["sweep_value"]), float(r["mean"])))
    out = {}
    for label, pts in series.items():
        pts = np.array(sorted(pts))
        if spec.y_scale in ("db", "log"):     # log-domain plots drop y <= 0
            pts = pts[pts[:, 1] > 0.0]
        if spec.y_scale == "db":
            pts[:, 1] = 10.0 * np.log10(pts[:, 1])
        if len(pts):
            out[label] = pts
    if not out:
        raise RenderError(f"{spec.csv_path}: no plottable rows")
    return out


def _render_lines(spec, ax):
    series = _line_series(spec, *load_rows(spec.csv_path))
    for i, label in enumerate(sorted(series)):
        pts = series[label]
        ax.plot(pts[:, 0], pts[:, 1], label=label,
                color=_COLORS[i % len(_COLORS)],
                marker=_MARKERS[i % len(_MARKERS)])
    if spec.x_scale == "log":
        ax.set_xscale("log")
    if spec.y_scale == "log":
        ax.set_yscale("log")
    ax.legend(loc="best")


_SCATTER_STYLE = {        # truth under the estimates, estimates on top
    "truth": dict(marker="o", s=70.0, facecolors="none", edgecolors="black"),
    "omp_sr": dict(marker="^", s=35.0, color="#1f77b4"),
    "omp": dict(marker="x", s=35.0, color="#d62728"),
}


def _render_scatter(spec, ax):
    header, rows = load_rows(spec.csv_path)
    _require(header, ("kind", "range_m", "virtual_angle", "amplitude"),
             spec.csv_path)
    groups = {}
    for r in rows:
        groups.setdefault(r["kind"], []).append(
            (float(r["virtual_angle"]), float(r["range_m"])))
    known = [k for k in _SCATTER_STYLE if k in groups]
    extras = sorted(k for k in groups if k not in _SCATTER_STYLE)
    for i, kind in enumerate(known + extras):
        pts = np.array(groups[kind])
        style = _SCATTER_STYLE.get(
            kind, dict(marker=_MARKERS[i % len(_MARKERS)], s=35.0,
                       color=_COLORS[i % len(_COLORS)]))
        ax.scatter(pts[:, 0], pts[:, 1], label=kind, **style)
    ax.legend(loc="best")


def render(spec, out_path):
    """Draw the figure for spec and write it to out_path (PNG)."""
    if isinstance(spec.series_keys, list):
        spec = replace(spec, series_keys=tuple(spec.series_keys))
    # library defaults underneath the pinned overrides, so a user
    # matplotlibrc cannot leak into the rendered bytes
    base = {k: v for k, v in matplotlib.rcParamsDefault.items()
            if k != "backend"}
    with plt.rc_context({**base, **_RC}):
        fig, ax = plt.subplots()
        try:
            if spec.kind == "scatter":
                _render_scatter(spec, ax)
            elif spec.kind == "lines":
                _render_lines(spec, ax)
            else:
                raise RenderError(f"unknown figure kind {spec.kind!r}")
            ax.set_xlabel(spec.x_label)
            ax.set_ylabel(spec.y_label)
            ax.set_title(spec.preset)
            fig.tight_layout()
            fig.savefig(out_path, format="png", metadata=_METADATA)
        finally:
            plt.close(fig)
    return out_path
