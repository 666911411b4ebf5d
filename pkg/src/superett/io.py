"""Text serialization of scans, ground truth, estimates and metrics.

Scan files are diffable plain text: `# key=value` header lines, then one
block per frame starting with `F <k> <sensor_x> <sensor_y>` followed by
one `P <x> <y>` line per point (6 significant digits), blocks separated by
a blank line. Tables (truth, estimates, metrics) are comma-separated with
a fixed column order, optional `# key=value` header lines, and floats at 9
significant digits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .lidar import Scan
from .metrics import MetricsReport

SCAN_FORMAT = "superett-scan-v1"
TRUTH_FORMAT = "superett-truth-v1"
ESTIMATES_FORMAT = "superett-estimates-v1"
METRICS_FORMAT = "superett-metrics-v1"

TRUTH_COLUMNS = ["k", "cx", "cy", "phi", "d1", "d2", "q", "vx", "vy"]
ESTIMATE_COLUMNS_BASE = [
    "k", "n_points", "cx", "cy", "phi", "d1", "d2", "vx", "vy",
    "lambda1", "lambda2", "ess", "gate1_rate", "gate2_rate", "wall_time",
]
METRICS_COLUMNS = [
    "rmse_c", "rmse_v", "rmse_d1", "rmse_d2", "iou", "wall_time", "n_runs", "n_failed",
]


class DataFormatError(ValueError):
    """Malformed or misaligned data file; message carries path and line."""


def _fmt(x: float, digits: int = 9) -> str:
    return f"{float(x):.{digits}g}"


def _header_lines(header: dict) -> list[str]:
    return [f"# {key}={value}" for key, value in header.items()]


def write_scan_file(path, scans: list[Scan], header: dict | None = None) -> None:
    lines = [f"# format={SCAN_FORMAT}"]
    lines += _header_lines(header or {})
    for scan in scans:
        sx, sy = scan.sensor_pos
        lines.append(f"F {scan.k} {_fmt(sx, 6)} {_fmt(sy, 6)}")
        for x, y in scan.points:
            lines.append(f"P {_fmt(x, 6)} {_fmt(y, 6)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))


def read_scan_file(path) -> tuple[dict, list[Scan]]:
    header: dict[str, str] = {}
    scans: list[Scan] = []
    frame_k = None
    sensor = None
    points: list[list[float]] = []

    def flush():
        if frame_k is not None:
            scans.append(Scan(k=frame_k, sensor_pos=sensor, points=np.array(points)))

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
            continue
        fields = line.split()
        try:
            if fields[0] == "F":
                flush()
                frame_k = int(fields[1])
                sensor = [float(fields[2]), float(fields[3])]
                points = []
            elif fields[0] == "P":
                if frame_k is None:
                    raise ValueError("point before any frame line")
                points.append([float(fields[1]), float(fields[2])])
            else:
                raise ValueError(f"unknown record {fields[0]!r}")
        except (IndexError, ValueError) as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    flush()
    return header, scans


def _write_table(path, columns: list[str], rows, header: dict | None = None) -> None:
    lines = _header_lines(header or {})
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, (int, np.integer)) else str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _read_table(path) -> tuple[dict, dict[str, np.ndarray]]:
    header: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[float]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in line.split(",")]
            continue
        cells = line.split(",")
        if len(cells) != len(columns):
            raise DataFormatError(
                f"{path}:{lineno}: expected {len(columns)} cells, got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    if columns is None:
        raise DataFormatError(f"{path}: no column header found")
    data = np.array(rows) if rows else np.empty((0, len(columns)))
    return header, {name: data[:, j] for j, name in enumerate(columns)}


def write_truth_file(path, scenario, header: dict | None = None) -> None:
    hdr = {"format": TRUTH_FORMAT}
    hdr.update(header or {})
    rows = [
        [
            k,
            scenario.c[k, 0], scenario.c[k, 1], scenario.phi[k],
            scenario.d[0], scenario.d[1], scenario.q,
            scenario.c_dot[k, 0], scenario.c_dot[k, 1],
        ]
        for k in range(scenario.n_steps)
    ]
    _write_table(path, TRUTH_COLUMNS, rows, hdr)


def read_truth_file(path) -> tuple[dict, dict[str, np.ndarray]]:
    header, data = _read_table(path)
    missing = [c for c in TRUTH_COLUMNS if c not in data]
    if missing:
        raise DataFormatError(f"{path}: missing truth columns {missing}")
    return header, data


def estimate_columns(unknown_q: bool) -> list[str]:
    cols = list(ESTIMATE_COLUMNS_BASE)
    if unknown_q:
        cols.insert(cols.index("vx"), "q")
    return cols


def write_estimates_file(path, record, unknown_q: bool, header: dict | None = None) -> None:
    """Serialize one run's per-step estimates and diagnostics."""
    hdr = {"format": ESTIMATES_FORMAT, "unknown_q": str(unknown_q).lower()}
    hdr.update(header or {})
    rows = []
    for est, diag in zip(record.estimates, record.diagnostics):
        row = [
            diag.k, diag.n_points,
            est.x_n_hat.c[0], est.x_n_hat.c[1], est.x_n_hat.phi,
            est.d_hat[0], est.d_hat[1],
        ]
        if unknown_q:
            row.append(est.extent_hat.q)
        row += [
            est.x_n_hat.c_dot[0], est.x_n_hat.c_dot[1],
            est.lam_hat[0], est.lam_hat[1],
            diag.ess, diag.gate_rates[0], diag.gate_rates[1], diag.wall_time,
        ]
        rows.append(row)
    _write_table(path, estimate_columns(unknown_q), rows, hdr)


def read_estimates_file(path) -> tuple[dict, dict[str, np.ndarray]]:
    header, data = _read_table(path)
    for col in ("k", "cx", "cy", "phi", "d1", "d2"):
        if col not in data:
            raise DataFormatError(f"{path}: missing estimates column {col!r}")
    return header, data


def write_metrics_file(path, report: MetricsReport, n_runs: int, n_failed: int,
                       header: dict | None = None) -> None:
    hdr = {"format": METRICS_FORMAT}
    hdr.update(header or {})
    row = [
        report.rmse_c, report.rmse_v, report.rmse_d1, report.rmse_d2,
        report.iou, report.wall_time, n_runs, n_failed,
    ]
    _write_table(path, METRICS_COLUMNS, [row], hdr)


def read_metrics_file(path) -> tuple[dict, dict[str, float]]:
    header, data = _read_table(path)
    if any(c not in data for c in METRICS_COLUMNS):
        raise DataFormatError(f"{path}: missing metrics columns")
    return header, {c: float(data[c][0]) for c in METRICS_COLUMNS}


def write_key_values(path, mapping: dict) -> None:
    """Flat key=value file (resolved configuration echo)."""
    lines = [f"{key}={value}" for key, value in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_key_values(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
