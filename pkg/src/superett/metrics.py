"""Tracking performance metrics: pooled RMSE and extent IOU.

RMSE pools squared errors over every time step of every run before taking
the root. IOU is computed by clipping 512-vertex polygonizations of the
two extents against each other, so it is deterministic and fast; a
Monte Carlo membership-sampling oracle in the test suite validates it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SuperellipseExtent, contour_polygon

IOU_POLYGON_VERTICES = 512


@dataclass
class MetricsReport:
    """Aggregated run metrics. ``wall_time`` is the mean per-scan filter time."""

    rmse_c: float
    rmse_v: float
    rmse_d1: float
    rmse_d2: float
    iou: float
    wall_time: float

    def __post_init__(self):
        if self.iou > 1.0 + 1e-9:
            raise ValueError(f"iou cannot exceed 1, got {self.iou}")


def rmse(truth, estimates) -> float:
    """Root mean squared error pooled over runs and steps.

    Args:
        truth: ground truth of shape (K,) or (K, D).
        estimates: stacked estimates of shape (R, K) or (R, K, D).

    Vector quantities use the squared Euclidean norm of the per-step error.
    The result is invariant to run and step ordering.
    """
    truth = np.asarray(truth, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if estimates.shape[1:] != truth.shape:
        raise ValueError(
            f"estimate runs of shape {estimates.shape} do not align with truth {truth.shape}"
        )
    err = estimates - truth[None, ...]
    sq = err ** 2
    if sq.ndim == 3:
        sq = sq.sum(axis=-1)
    return float(np.sqrt(sq.mean()))


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise vertex order."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip_halfplane(poly: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Keep the part of poly left of the directed line a -> b.
    edge = b - a
    cross = edge[0] * (poly[:, 1] - a[1]) - edge[1] * (poly[:, 0] - a[0])
    keep = cross >= 0.0
    if keep.all():
        return poly
    if not keep.any():
        return poly[:0]
    prev = np.roll(poly, 1, axis=0)
    prev_cross = np.roll(cross, 1)
    prev_keep = np.roll(keep, 1)
    crossing = keep != prev_keep
    cidx = np.flatnonzero(crossing)
    t = prev_cross[cidx] / (prev_cross[cidx] - cross[cidx])
    inter = prev[cidx] + t[:, None] * (poly[cidx] - prev[cidx])

    # Emit, per subject edge, the boundary crossing (if any) followed by the
    # kept endpoint (if any), preserving traversal order.
    counts = crossing.astype(int) + keep.astype(int)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    out = np.empty((int(counts.sum()), 2))
    out[offsets[cidx]] = inter
    out[(offsets + crossing.astype(int))[keep]] = poly[keep]
    return out


def clip_convex_polygon(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of ``subject`` by a convex CCW ``clipper``.

    Clipper edges that do not cut the subject are skipped via a single
    vectorized containment test, which keeps clipping cheap when the two
    polygons mostly overlap.
    """
    if len(subject) < 3 or len(clipper) < 3:
        return subject[:0]
    nxt = np.roll(clipper, -1, axis=0)
    edges = nxt - clipper
    cross = edges[:, 0][:, None] * (subject[None, :, 1] - clipper[:, 1][:, None]) - edges[
        :, 1
    ][:, None] * (subject[None, :, 0] - clipper[:, 0][:, None])
    inside = cross >= 0.0
    if not inside.any(axis=1).all():
        return subject[:0]
    cutting = np.flatnonzero(~inside.all(axis=1))
    out = subject
    for i in cutting:
        out = _clip_halfplane(out, clipper[i], nxt[i])
        if len(out) < 3:
            return out[:0]
    return out


def iou(
    extent_a: SuperellipseExtent,
    extent_b: SuperellipseExtent,
    n_vertices: int = IOU_POLYGON_VERTICES,
) -> float:
    """Intersection-over-union of the regions bounded by two contours.

    Both exponents must be at least 1 so the polygonizations are convex and
    the clip is exact up to discretization.
    """
    if extent_a.q < 1.0 or extent_b.q < 1.0:
        raise ValueError("iou supports convex contours only (q >= 1)")
    poly_a = contour_polygon(extent_a, n_vertices)
    poly_b = contour_polygon(extent_b, n_vertices)
    area_a = polygon_area(poly_a)
    area_b = polygon_area(poly_b)
    inter = polygon_area(clip_convex_polygon(poly_a, poly_b))
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))
