"""Analytic ground-truth trajectories for the benchmark scenarios.

Positions and orientations are closed-form in time; stored velocities are
the instantaneous derivatives, so on straight segments they agree exactly
with finite differences of the positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SuperellipseExtent, wrap_angle

SCENARIO_NAMES = ("linear", "curved", "drifting", "uturn")


@dataclass
class Scenario:
    """Per-step ground truth: centroid, orientation and velocity."""

    name: str
    T: float
    d: np.ndarray
    q: float
    c: np.ndarray
    phi: np.ndarray
    c_dot: np.ndarray

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.c_dot = np.asarray(self.c_dot, dtype=float)
        k = self.c.shape[0]
        if self.phi.shape != (k,) or self.c_dot.shape != (k, 2) or self.c.shape != (k, 2):
            raise ValueError("trajectory arrays must share one length K")

    @property
    def n_steps(self) -> int:
        return self.c.shape[0]

    def extent_at(self, k: int) -> SuperellipseExtent:
        return SuperellipseExtent(c=self.c[k], phi=float(self.phi[k]), d=self.d, q=self.q)


def _linear(T, d, q, start=(-40.0, -10.0), end=(35.0, -10.0), speed=3.0) -> Scenario:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    length = float(np.linalg.norm(end - start))
    direction = (end - start) / length
    n = int(round(length / (speed * T))) + 1
    t = T * np.arange(n)
    c = start[None, :] + speed * t[:, None] * direction[None, :]
    heading = math.atan2(direction[1], direction[0])
    return Scenario(
        name="linear", T=T, d=d, q=q,
        c=c,
        phi=np.full(n, wrap_angle(heading)),
        c_dot=np.tile(speed * direction, (n, 1)),
    )


def _curved_path(T, d, q, name, drift_deg, start=(-40.0, -10.0), speed=3.0,
                 duration=25.0, turn_deg=30.0) -> Scenario:
    # Straight, constant-rate turn over the middle third, straight again.
    # In the drifting variant the body orientation lags the velocity
    # direction by an angle ramping up to drift_deg over the turn.
    start = np.asarray(start, dtype=float)
    n = int(round(duration / T)) + 1
    t = T * np.arange(n)
    t1, t2 = duration / 3.0, 2.0 * duration / 3.0
    omega = math.radians(turn_deg) / (t2 - t1)
    radius = speed / omega
    p1 = start + np.array([speed * t1, 0.0])
    turn_total = math.radians(turn_deg)
    p2 = p1 + radius * np.array([math.sin(turn_total), 1.0 - math.cos(turn_total)])

    heading = np.clip((t - t1) / (t2 - t1), 0.0, 1.0) * turn_total
    c = np.empty((n, 2))
    seg1 = t < t1
    seg2 = (t >= t1) & (t <= t2)
    seg3 = t > t2
    c[seg1] = start + np.outer(speed * t[seg1], [1.0, 0.0])
    tau = t[seg2] - t1
    c[seg2] = p1 + radius * np.stack(
        [np.sin(omega * tau), 1.0 - np.cos(omega * tau)], axis=-1
    )
    c[seg3] = p2 + np.outer(
        speed * (t[seg3] - t2), [math.cos(turn_total), math.sin(turn_total)]
    )
    c_dot = speed * np.stack([np.cos(heading), np.sin(heading)], axis=-1)

    drift = math.radians(drift_deg) * np.clip((t - t1) / (t2 - t1), 0.0, 1.0)
    phi = np.array([wrap_angle(h) for h in heading - drift])
    return Scenario(name=name, T=T, d=d, q=q, c=c, phi=phi, c_dot=c_dot)


def _uturn(T, d, q, radius=10.0, speed=2.0, straight_time=5.0) -> Scenario:
    # Straight approach tangent to a circle centred on the origin, a
    # counterclockwise semicircle, then a straight departure.
    arc_time = math.pi * radius / speed
    duration = 2.0 * straight_time + arc_time
    n = int(math.floor(duration / T)) + 1
    t = T * np.arange(n)
    t1 = straight_time
    t2 = straight_time + arc_time
    omega = speed / radius

    c = np.empty((n, 2))
    c_dot = np.empty((n, 2))
    phi = np.empty(n)
    seg1 = t < t1
    seg2 = (t >= t1) & (t <= t2)
    seg3 = t > t2

    c[seg1] = np.stack([speed * (t[seg1] - t1), np.full(seg1.sum(), -radius)], axis=-1)
    c_dot[seg1] = [speed, 0.0]
    phi[seg1] = 0.0

    theta = -0.5 * math.pi + omega * (t[seg2] - t1)
    c[seg2] = radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    c_dot[seg2] = speed * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    phi[seg2] = [wrap_angle(th + 0.5 * math.pi) for th in theta]

    c[seg3] = np.stack([-speed * (t[seg3] - t2), np.full(seg3.sum(), radius)], axis=-1)
    c_dot[seg3] = [-speed, 0.0]
    phi[seg3] = math.pi

    return Scenario(name="uturn", T=T, d=d, q=q, c=c, phi=phi, c_dot=c_dot)


def generate_scenario(
    name: str, T: float = 0.1, d=(2.5, 1.5), q: float = 5.0, **params
) -> Scenario:
    """Build one of the named scenarios.

    linear:   constant velocity along the major axis, (-40,-10) to (35,-10)
              at 3 m/s.
    curved:   same start and speed with a 30 degree constant-rate turn over
              the middle third, orientation aligned with the velocity.
    drifting: curved path, but the orientation lags the velocity by a drift
              angle ramping to 25 degrees during the turn.
    uturn:    5 s straight, a semicircle of radius 10 m around the origin at
              2 m/s, then 5 s straight.

    Keyword overrides (start, end, speed, turn_deg, drift_deg, radius,
    straight_time, duration) are forwarded to the builders.
    """
    d = np.asarray(d, dtype=float)
    key = name.lower()
    if key == "linear":
        return _linear(T, d, q, **params)
    if key == "curved":
        return _curved_path(T, d, q, "curved", drift_deg=params.pop("drift_deg", 0.0), **params)
    if key == "drifting":
        return _curved_path(T, d, q, "drifting", drift_deg=params.pop("drift_deg", 25.0), **params)
    if key == "uturn":
        return _uturn(T, d, q, **params)
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
