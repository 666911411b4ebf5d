"""Superelliptical extended-target tracking from 2D lidar point clouds."""

from .geometry import (
    ExtentStateLinear,
    SuperellipseExtent,
    body_frame,
    contour_point,
    contour_polygon,
    half_lengths_to_lambda,
    implicit_value,
    lambda_to_half_lengths,
    total_deviation,
)
from .lidar import Scan, SensorConfig, beam_bearings, cast_ray, scan_target
from .metrics import MetricsReport, iou, rmse
from .rbpf import (
    DegenerateFilterError,
    FilterConfig,
    InitializationError,
    NonlinearState,
    Particle,
    ParticleSet,
    TrackEstimate,
    estimate,
    init_particles,
    kf_measurement_update,
    kf_time_update,
    pf_sample,
    pseudo_log_likelihood,
    resample,
    scale_constraint_log_factor,
    step,
    weight_update,
)
from .runner import MonteCarloResult, RunRecord, run_monte_carlo, simulate_scans, track_scans
from .scenarios import Scenario, generate_scenario
from .visibility import Region, VisibilityFlags, VisibilityMargins, axis_visibility

__version__ = "0.1.0"

__all__ = [
    "DegenerateFilterError",
    "ExtentStateLinear",
    "FilterConfig",
    "InitializationError",
    "MetricsReport",
    "MonteCarloResult",
    "NonlinearState",
    "Particle",
    "ParticleSet",
    "Region",
    "RunRecord",
    "Scan",
    "Scenario",
    "SensorConfig",
    "SuperellipseExtent",
    "TrackEstimate",
    "VisibilityFlags",
    "VisibilityMargins",
    "axis_visibility",
    "beam_bearings",
    "body_frame",
    "cast_ray",
    "contour_point",
    "contour_polygon",
    "estimate",
    "generate_scenario",
    "half_lengths_to_lambda",
    "implicit_value",
    "init_particles",
    "iou",
    "kf_measurement_update",
    "kf_time_update",
    "lambda_to_half_lengths",
    "pf_sample",
    "pseudo_log_likelihood",
    "resample",
    "rmse",
    "run_monte_carlo",
    "scale_constraint_log_factor",
    "scan_target",
    "simulate_scans",
    "step",
    "total_deviation",
    "track_scans",
    "weight_update",
]
