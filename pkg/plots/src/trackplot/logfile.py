"""Parsers for the tracking run file formats.

Two formats are read, both plain text with `# key=value` metadata lines:
comma-separated tables with one header row (estimates, truth), and scan
files made of frame blocks `F <k> <sx> <sy>` followed by `P <x> <y>` lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LogFormatError(ValueError):
    pass


@dataclass
class Table:
    header: dict
    columns: dict

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def n_rows(self) -> int:
        return next(iter(self.columns.values())).size if self.columns else 0


@dataclass
class Frame:
    k: int
    sensor: np.ndarray
    points: np.ndarray


@dataclass
class ScanLog:
    header: dict = field(default_factory=dict)
    frames: list = field(default_factory=list)


def read_table(path) -> Table:
    header: dict = {}
    names = None
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                header[key.strip()] = val.strip()
            continue
        cells = line.split(",")
        if names is None:
            names = [c.strip() for c in cells]
            continue
        if len(cells) != len(names):
            raise LogFormatError(f"{path}:{lineno}: expected {len(names)} cells")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
    if names is None:
        raise LogFormatError(f"{path}: no column header row")
    data = np.array(rows) if rows else np.empty((0, len(names)))
    table = Table(header=header, columns={n: data[:, j] for j, n in enumerate(names)})
    if "k" in table.columns:
        order = np.argsort(table.columns["k"])
        table.columns = {n: v[order] for n, v in table.columns.items()}
    return table


def read_scan_log(path) -> ScanLog:
    log = ScanLog()
    k = None
    sensor = None
    points: list = []

    def flush():
        if k is not None:
            log.frames.append(
                Frame(k=k, sensor=np.asarray(sensor), points=np.array(points).reshape(-1, 2))
            )

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                log.header[key.strip()] = val.strip()
            continue
        fields = line.split()
        try:
            if fields[0] == "F":
                flush()
                k = int(fields[1])
                sensor = [float(fields[2]), float(fields[3])]
                points = []
            elif fields[0] == "P":
                points.append([float(fields[1]), float(fields[2])])
            else:
                raise ValueError(f"unknown record {fields[0]!r}")
        except (IndexError, ValueError) as exc:
            raise LogFormatError(f"{path}:{lineno}: {exc}") from exc
    flush()
    return log
