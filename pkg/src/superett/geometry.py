"""Superellipse contour geometry.

A superellipse (Lame curve) with centroid ``c``, orientation ``phi``,
half-lengths ``d = (d1, d2)`` and exponent ``q`` is the set of points
``y`` with

    lam1 * |y~1|**q + lam2 * |y~2|**q = 1,    y~ = R(phi).T @ (y - c),

where ``lam_j = d_j**(-q)``. The lambda parameterization makes the
contour equation linear in ``lam``, which the tracking filter exploits:
``q = 1`` gives a rhombus, ``q = 2`` an ellipse, and large ``q``
approaches a rectangle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(phi: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    return float(-((-phi + np.pi) % TWO_PI - np.pi))


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def half_lengths_to_lambda(d, q: float) -> np.ndarray:
    """Convert half-lengths to the linear contour coefficients d**(-q)."""
    d = np.asarray(d, dtype=float)
    if not np.all(d > 0):
        raise ValueError(f"half-lengths must be positive, got {d}")
    if not q > 0:
        raise ValueError(f"exponent q must be positive, got {q}")
    return d ** -q


def lambda_to_half_lengths(lam, q: float) -> np.ndarray:
    """Inverse of :func:`half_lengths_to_lambda`."""
    lam = np.asarray(lam, dtype=float)
    if not np.all(lam > 0):
        raise ValueError(f"lambda entries must be positive, got {lam}")
    if not q > 0:
        raise ValueError(f"exponent q must be positive, got {q}")
    return lam ** (-1.0 / q)


@dataclass(frozen=True)
class SuperellipseExtent:
    """Target extent: centroid, orientation, half-lengths and exponent.

    Instances are immutable and safe to share between threads. ``phi`` is
    normalized to (-pi, pi] on construction.
    """

    c: np.ndarray
    phi: float
    d: np.ndarray
    q: float

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if c.shape != (2,) or d.shape != (2,):
            raise ValueError("c and d must be length-2 vectors")
        if not np.isfinite(c).all():
            raise ValueError(f"centroid must be finite, got {c}")
        if not (np.isfinite(d).all() and np.all(d > 0)):
            raise ValueError(f"half-lengths must be positive, got {d}")
        if not (np.isfinite(self.q) and self.q > 0):
            raise ValueError(f"exponent q must be positive, got {self.q}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))
        object.__setattr__(self, "q", float(self.q))

    @property
    def lam(self) -> np.ndarray:
        return half_lengths_to_lambda(self.d, self.q)

    def linear_state(self) -> "ExtentStateLinear":
        return ExtentStateLinear(phi=self.phi, c=self.c, lam=self.lam)


@dataclass(frozen=True)
class ExtentStateLinear:
    """Extent with half-lengths replaced by lam = d**(-q).

    Round-trips exactly with :class:`SuperellipseExtent` given ``q``.
    """

    phi: float
    c: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        if c.shape != (2,) or lam.shape != (2,):
            raise ValueError("c and lam must be length-2 vectors")
        if not np.all(lam > 0):
            raise ValueError(f"lambda entries must be positive, got {lam}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "phi", float(self.phi))

    def to_extent(self, q: float) -> SuperellipseExtent:
        return SuperellipseExtent(
            c=self.c, phi=self.phi, d=lambda_to_half_lengths(self.lam, q), q=q
        )


def body_frame(y, c, phi: float) -> np.ndarray:
    """Map world points into the target body frame: R(phi).T @ (y - c).

    ``y`` may be a single point of shape (2,) or a batch (..., 2).
    """
    y = np.asarray(y, dtype=float)
    rel = y - np.asarray(c, dtype=float)
    cs, sn = np.cos(phi), np.sin(phi)
    return np.stack(
        [cs * rel[..., 0] + sn * rel[..., 1], -sn * rel[..., 0] + cs * rel[..., 1]],
        axis=-1,
    )


def implicit_value(extent: ExtentStateLinear, q: float, y):
    """Signed contour residual lam.T @ |y~|**q - 1.

    Negative strictly inside the contour, zero on it, positive outside.
    Accepts a single point (2,) or a batch (..., 2); returns a float or an
    array of matching batch shape.
    """
    if not q > 0:
        raise ValueError(f"exponent q must be positive, got {q}")
    yb = body_frame(y, extent.c, extent.phi)
    vals = np.abs(yb) ** q @ extent.lam - 1.0
    if yb.ndim == 1:
        return float(vals)
    return vals


def contour_point(extent: SuperellipseExtent, theta):
    """Point on the contour at parameter ``theta``.

    Uses the parametric form
    ``(d1 * sgn(cos t)|cos t|**(2/q), d2 * sgn(sin t)|sin t|**(2/q))``
    in the body frame, which satisfies the implicit contour equation
    exactly. Accepts scalar or array ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    e = 2.0 / extent.q
    ct, st = np.cos(theta), np.sin(theta)
    xb = extent.d[0] * np.sign(ct) * np.abs(ct) ** e
    yb = extent.d[1] * np.sign(st) * np.abs(st) ** e
    body = np.stack([xb, yb], axis=-1)
    return extent.c + body @ rotation_matrix(extent.phi).T


def contour_polygon(extent: SuperellipseExtent, n_vertices: int = 512) -> np.ndarray:
    """Polygonize the contour with ``n_vertices`` counterclockwise vertices.

    Vertices are sampled at uniform parameter values. The polygon is convex
    for q >= 1.
    """
    if n_vertices < 8:
        raise ValueError(f"n_vertices must be at least 8, got {n_vertices}")
    thetas = np.linspace(0.0, TWO_PI, n_vertices, endpoint=False)
    return contour_point(extent, thetas)


def total_deviation(extent: ExtentStateLinear, q: float, points) -> float:
    """Sum of squared contour residuals over a point set (the fit cost)."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ValueError("total_deviation requires a nonempty point set")
    h = implicit_value(extent, q, points.reshape(-1, 2))
    return float(np.sum(h * h))
