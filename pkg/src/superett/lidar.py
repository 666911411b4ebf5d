"""2D scanning-lidar simulation against a superelliptical target.

Beams are cast on a fixed angular grid, each reporting the nearest
contour intersection (which yields self-occlusion for free), and hits are
perturbed by Gaussian range and bearing noise in sensor polar coordinates
before conversion back to Cartesian points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SuperellipseExtent

_BISECT_ITERS = 64


@dataclass(frozen=True)
class SensorConfig:
    """Scanner position, angular coverage and noise levels.

    ``fov_deg`` is the total field of view and ``angular_resolution_deg``
    the beam spacing. Bearings are anchored to the world +x axis: beams lie
    at integer multiples of the resolution (restricted to [-fov/2, fov/2]
    when the field of view is partial).
    """

    position: np.ndarray
    fov_deg: float = 360.0
    angular_resolution_deg: float = 0.2
    sigma_range: float = 0.01
    sigma_bearing_deg: float = 0.005
    max_range: float = 200.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.shape != (2,) or not np.isfinite(pos).all():
            raise ValueError(f"sensor position must be a finite 2-vector, got {pos}")
        if not 0.0 < self.fov_deg <= 360.0:
            raise ValueError(f"fov must lie in (0, 360], got {self.fov_deg}")
        if not self.angular_resolution_deg > 0:
            raise ValueError("angular resolution must be positive")
        if self.sigma_range < 0 or self.sigma_bearing_deg < 0:
            raise ValueError("noise standard deviations must be nonnegative")
        if not self.max_range > 0:
            raise ValueError("max range must be positive")
        object.__setattr__(self, "position", pos)


@dataclass
class Scan:
    """One time step of contour measurements with the sensor pose."""

    k: int
    sensor_pos: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.sensor_pos = np.asarray(self.sensor_pos, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (M, 2), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("scan points must be finite")
        self.points = pts

    def __len__(self) -> int:
        return self.points.shape[0]


def beam_bearings(sensor: SensorConfig) -> np.ndarray:
    """Beam bearing grid in radians, increasing."""
    res = math.radians(sensor.angular_resolution_deg)
    if sensor.fov_deg >= 360.0:
        n = int(round(360.0 / sensor.angular_resolution_deg))
        return res * np.arange(n)
    half = math.radians(sensor.fov_deg) / 2.0
    i0 = math.ceil(-half / res - 1e-12)
    i1 = math.floor(half / res + 1e-12)
    return res * np.arange(i0, i1 + 1)


def _cast_ray_fan(
    origin: np.ndarray,
    bearings: np.ndarray,
    extent: SuperellipseExtent,
    max_range: float,
) -> np.ndarray:
    """Nearest contour intersection range per bearing; NaN where the ray misses.

    The contour lies inside the body-frame box [-d1, d1] x [-d2, d2], so
    each ray is first intersected with the circumscribed circle of that box
    to bound the search window. Within the window the root is bracketed by
    marching with a step of min(d)/10 and then refined by bisection, which
    leaves the returned range within ~1e-15 m of the true nearest root.
    """
    origin = np.asarray(origin, dtype=float)
    bearings = np.atleast_1d(np.asarray(bearings, dtype=float))
    out = np.full(bearings.shape, np.nan)

    dirs = np.stack([np.cos(bearings), np.sin(bearings)], axis=-1)
    oc = origin - extent.c
    bound = float(np.hypot(extent.d[0], extent.d[1])) * (1.0 + 1e-12)

    half_b = dirs @ oc
    disc = half_b * half_b - (oc @ oc - bound * bound)
    windowed = disc > 0.0
    if not windowed.any():
        return out

    sq = np.sqrt(disc[windowed])
    lo = np.maximum(-half_b[windowed] - sq, 0.0)
    hi = np.minimum(-half_b[windowed] + sq, max_range)
    ok = hi > lo
    if not ok.any():
        return out
    idx = np.flatnonzero(windowed)[ok]
    lo, hi = lo[ok], hi[ok]
    dx, dy = dirs[idx, 0], dirs[idx, 1]

    cs, sn = np.cos(extent.phi), np.sin(extent.phi)
    lam1, lam2 = extent.lam
    q = extent.q
    cx, cy = extent.c

    def residual(t, ux, uy):
        relx = (origin[0] + t * ux) - cx
        rely = (origin[1] + t * uy) - cy
        bx = cs * relx + sn * rely
        by = -sn * relx + cs * rely
        return lam1 * np.abs(bx) ** q + lam2 * np.abs(by) ** q - 1.0

    step = float(min(extent.d)) / 10.0
    n_steps = int(np.ceil((hi - lo).max() / step)) + 1
    grid = lo[:, None] + step * np.arange(n_steps + 1)
    grid = np.minimum(grid, hi[:, None])
    vals = residual(grid, dx[:, None], dy[:, None])

    pos = vals > 0.0
    crossing = pos[:, :-1] != pos[:, 1:]
    found = crossing.any(axis=1)
    if not found.any():
        return out
    first = crossing.argmax(axis=1)
    rows = np.flatnonzero(found)
    a = grid[rows, first[rows]]
    b = grid[rows, first[rows] + 1]
    fa = vals[rows, first[rows]]
    ux, uy = dx[rows], dy[rows]

    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (a + b)
        fm = residual(mid, ux, uy)
        same = (fm > 0.0) == (fa > 0.0)
        a = np.where(same, mid, a)
        fa = np.where(same, fm, fa)
        b = np.where(same, b, mid)

    out[idx[rows]] = 0.5 * (a + b)
    return out


def cast_ray(sensor: SensorConfig, bearing: float, extent: SuperellipseExtent):
    """Range to the nearest contour intersection along one bearing.

    Returns None when the ray misses the target or the nearest
    intersection lies beyond the sensor's maximum range.
    """
    t = _cast_ray_fan(sensor.position, np.array([bearing]), extent, sensor.max_range)[0]
    return None if np.isnan(t) else float(t)


def scan_polar(sensor: SensorConfig, extent: SuperellipseExtent):
    """Noise-free scan as (bearings, ranges) of the hitting beams only."""
    bearings = beam_bearings(sensor)
    ranges = _cast_ray_fan(sensor.position, bearings, extent, sensor.max_range)
    hit = np.isfinite(ranges)
    return bearings[hit], ranges[hit]


def polar_to_scan(
    sensor: SensorConfig,
    bearings: np.ndarray,
    ranges: np.ndarray,
    rng: np.random.Generator,
    k: int = 0,
) -> Scan:
    """Apply polar Gaussian noise to hits and convert to Cartesian points.

    Noise is drawn in beam order, all range perturbations first, then all
    bearing perturbations, so scans are reproducible for a given stream.
    """
    n = ranges.size
    r = ranges + rng.normal(0.0, sensor.sigma_range, n)
    b = bearings + rng.normal(0.0, math.radians(sensor.sigma_bearing_deg), n)
    points = sensor.position + np.stack([r * np.cos(b), r * np.sin(b)], axis=-1)
    return Scan(k=k, sensor_pos=sensor.position, points=points)


def scan_target(
    sensor: SensorConfig,
    extent: SuperellipseExtent,
    rng: np.random.Generator,
    k: int = 0,
) -> Scan:
    """Simulate one full lidar sweep of the target."""
    bearings, ranges = scan_polar(sensor, extent)
    return polar_to_scan(sensor, bearings, ranges, rng, k=k)
