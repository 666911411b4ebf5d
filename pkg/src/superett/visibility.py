"""Sensor-target visibility gating.

Whether the extension of the target along a body axis can be measured
depends on where the sensor sits relative to the slabs bounded by the
tangent lines on the four sides of the contour. The gate for axis j tests
the sensor offset along the *other* axis:

    b1 = |e2.T R(phi).T (s - c)| > d2 + eps2
    b2 = |e1.T R(phi).T (s - c)| > d1 + eps1

with margins eps enlarging the slabs to absorb finite beam resolution.
The gating geometry is intended for reasonably rectangular contours
(q >= 2); for smaller q the observable properties of the contour differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import SuperellipseExtent, body_frame


class Region(Enum):
    """Sensor location relative to the margin-free slab boundaries.

    Labels run counterclockwise. R1 is the slab beyond the long side on
    the +minor-axis side (only the major extension is measurable there),
    R3 beyond the +major-axis end, and the even labels are the corner
    regions where both extensions are measurable. INTERIOR covers the
    target's own footprint, which the eight outside regions do not.
    """

    R1 = 1
    R2 = 2
    R3 = 3
    R4 = 4
    R5 = 5
    R6 = 6
    R7 = 7
    R8 = 8
    INTERIOR = 0


@dataclass(frozen=True)
class VisibilityMargins:
    """Nonnegative slab enlargements, meters."""

    eps1: float = 0.5
    eps2: float = 0.5

    def __post_init__(self):
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError(f"margins must be nonnegative, got {self}")


@dataclass(frozen=True)
class VisibilityFlags:
    b1: bool
    b2: bool
    region: Region


def axis_gates(sensor_pos, phi, c, d, margins: VisibilityMargins) -> np.ndarray:
    """Vectorized per-hypothesis visibility gates.

    Args:
        sensor_pos: sensor position (2,).
        phi: orientations (N,).
        c: centroids (N, 2).
        d: half-lengths (N, 2); NaN rows gate to False.
        margins: slab margins.

    Returns:
        Boolean array (N, 2) with columns (b1, b2). Strict inequality, so
        a sensor exactly on a boundary does not open the gate.
    """
    phi = np.asarray(phi, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    rel = np.asarray(sensor_pos, dtype=float) - c
    cs, sn = np.cos(phi), np.sin(phi)
    s1 = cs * rel[:, 0] + sn * rel[:, 1]
    s2 = -sn * rel[:, 0] + cs * rel[:, 1]
    b1 = np.abs(s2) > d[:, 1] + margins.eps2
    b2 = np.abs(s1) > d[:, 0] + margins.eps1
    return np.stack([b1, b2], axis=-1)


def _classify_region(s_body: np.ndarray, d: np.ndarray) -> Region:
    # Margin-free slab tests; counterclockwise labels starting above the
    # +minor side.
    x, y = float(s_body[0]), float(s_body[1])
    d1, d2 = float(d[0]), float(d[1])
    out1 = abs(x) > d1
    out2 = abs(y) > d2
    if not out1 and not out2:
        return Region.INTERIOR
    if not out1:
        return Region.R1 if y > 0 else Region.R5
    if not out2:
        return Region.R3 if x < 0 else Region.R7
    if x < 0:
        return Region.R2 if y > 0 else Region.R4
    return Region.R8 if y > 0 else Region.R6


def axis_visibility(
    sensor_pos, extent: SuperellipseExtent, margins: VisibilityMargins
) -> VisibilityFlags:
    """Visibility gates and region classification for one sensor/extent pair."""
    gates = axis_gates(
        sensor_pos, np.array([extent.phi]), extent.c[None, :], extent.d[None, :], margins
    )[0]
    s_body = body_frame(sensor_pos, extent.c, extent.phi)
    return VisibilityFlags(
        b1=bool(gates[0]), b2=bool(gates[1]), region=_classify_region(s_body, extent.d)
    )
