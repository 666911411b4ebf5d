"""Rendering for tracking run logs (estimate tables, truth tables, scan files)."""

from .logfile import Frame, LogFormatError, ScanLog, Table, read_scan_log, read_table
from .render import PlotSpec, build_figure, contour_points, render

__version__ = "0.1.0"

__all__ = [
    "Frame",
    "LogFormatError",
    "PlotSpec",
    "ScanLog",
    "Table",
    "build_figure",
    "contour_points",
    "read_scan_log",
    "read_table",
    "render",
]
