"""Figure construction for tracking run logs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .logfile import ScanLog, Table

CONTOUR_SAMPLES = 256


@dataclass
class PlotSpec:
    log_path: Path
    out_path: Path
    truth_path: Path | None = None
    scans_path: Path | None = None
    stride: int = 25
    axis_limits: tuple | None = None
    show_truth: bool = True
    dpi: int = 150

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be at least 1")


def contour_points(cx, cy, phi, d1, d2, q, n=CONTOUR_SAMPLES):
    """Sample the closed contour for one table row (parametric form)."""
    t = np.linspace(0.0, 2.0 * np.pi, n + 1)
    e = 2.0 / q
    bx = d1 * np.sign(np.cos(t)) * np.abs(np.cos(t)) ** e
    by = d2 * np.sign(np.sin(t)) * np.abs(np.sin(t)) ** e
    cs, sn = np.cos(phi), np.sin(phi)
    return np.stack([cx + cs * bx - sn * by, cy + sn * bx + cs * by], axis=-1)


def _row_q(table: Table, i: int) -> float:
    if "q" in table:
        return float(table["q"][i])
    q_fixed = table.header.get("q_fixed", "")
    if not q_fixed:
        raise ValueError("log has neither a q column nor a q_fixed header")
    return float(q_fixed)


def _draw_contour_family(ax, table: Table, stride: int, color: str, label: str):
    n = table.n_rows
    first = True
    for i in range(0, n, stride):
        poly = contour_points(
            table["cx"][i], table["cy"][i], table["phi"][i],
            table["d1"][i], table["d2"][i], _row_q(table, i),
        )
        ax.plot(poly[:, 0], poly[:, 1], color=color, lw=1.0,
                label=label if first else None)
        first = False
        if "vx" in table and "vy" in table:
            ax.annotate(
                "", xy=(table["cx"][i] + table["vx"][i], table["cy"][i] + table["vy"][i]),
                xytext=(table["cx"][i], table["cy"][i]),
                arrowprops=dict(arrowstyle="->", color=color, lw=0.8),
            )
    ax.plot(table["cx"], table["cy"], color=color, ls=":", lw=0.8)


def build_figure(estimates: Table, truth: Table | None = None,
                 scans: ScanLog | None = None, stride: int = 25,
                 axis_limits: tuple | None = None):
    """Assemble the track figure; adds an exponent trace panel for logs
    carrying a per-step q column."""
    with_q_trace = "q" in estimates
    if with_q_trace:
        fig, (ax, ax_q) = plt.subplots(
            2, 1, figsize=(7, 9), height_ratios=[3, 1], constrained_layout=True
        )
    else:
        fig, ax = plt.subplots(figsize=(7, 7), constrained_layout=True)

    if scans is not None and scans.frames:
        pts = np.concatenate([f.points for f in scans.frames if f.points.size])
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.0, color="0.65", label="measurements",
                zorder=0)
        sensor = scans.frames[0].sensor
        ax.plot(*sensor, marker="^", ms=10, color="tab:red", ls="none", label="sensor")

    if truth is not None:
        _draw_contour_family(ax, truth, stride, color="tab:blue", label="truth")
    _draw_contour_family(ax, estimates, stride, color="black", label="estimate")

    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if axis_limits is not None:
        ax.set_xlim(axis_limits[0], axis_limits[1])
        ax.set_ylim(axis_limits[2], axis_limits[3])
    ax.legend(loc="best", fontsize=8)

    if with_q_trace:
        ax_q.plot(estimates["k"], estimates["q"], color="black", lw=1.2)
        if truth is not None and "q" in truth:
            ax_q.plot(truth["k"], truth["q"], color="tab:blue", lw=1.0, ls="--")
        ax_q.set_xlabel("frame")
        ax_q.set_ylabel("exponent estimate")
        ax_q.grid(alpha=0.3)
    return fig


def render(spec: PlotSpec) -> Path:
    from .logfile import read_scan_log, read_table

    estimates = read_table(spec.log_path)
    truth = read_table(spec.truth_path) if (spec.truth_path and spec.show_truth) else None
    scans = read_scan_log(spec.scans_path) if spec.scans_path else None
    fig = build_figure(estimates, truth, scans, spec.stride, spec.axis_limits)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return out
