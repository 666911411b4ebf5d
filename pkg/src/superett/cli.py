"""Command-line entry point: simulate scans, track targets, evaluate runs.

Configuration comes from a flat key=value file plus overriding flags; every
run writes its fully resolved configuration next to its outputs so results
are self-describing. Exit codes: 0 success, 2 configuration error, 3 data
error, 4 degenerate filter.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as sio
from .lidar import SensorConfig
from .metrics import MetricsReport, iou, rmse
from .rbpf import DegenerateFilterError, FilterConfig, InitializationError
from .runner import run_monte_carlo, track_scans
from .scenarios import generate_scenario
from .visibility import VisibilityMargins

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """One reproducible experiment: source, sensor, filter and run control."""

    scenario: str | None
    data_path: Path | None
    sensor: SensorConfig
    filter: FilterConfig
    n_runs: int
    seed: int
    output_dir: Path
    T: float
    target_d: tuple[float, float]
    target_q: float

    def __post_init__(self):
        if (self.scenario is None) == (self.data_path is None):
            raise ConfigError("exactly one of scenario= or data= must be given")
        if self.seed is None:
            raise ConfigError("seed is mandatory")


_FLOAT_KEYS = {
    "T", "sensor_x", "sensor_y", "fov_deg", "angular_resolution_deg",
    "sigma_range", "sigma_bearing_deg", "max_range",
    "sigma_phi", "sigma_a", "sigma_lambda", "sigma_q",
    "r_pseudo", "r_scale", "r_h", "eps1", "eps2",
    "q", "q_prior_mean", "q_prior_std",
    "target_d1", "target_d2", "target_q",
}
_INT_KEYS = {"seed", "runs", "particles"}
_STR_KEYS = {"scenario", "data", "out", "gamma_policy"}
_BOOL_KEYS = {"unknown_q"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def load_config(path) -> dict:
    """Parse a flat key=value config file with typed values."""
    try:
        raw = sio.read_key_values(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except sio.DataFormatError as exc:
        raise ConfigError(str(exc)) from exc
    out: dict = {}
    for key, value in raw.items():
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            elif key in _BOOL_KEYS:
                out[key] = _parse_bool(value)
            elif key in _STR_KEYS:
                out[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    return out


def resolve_run_config(args) -> RunConfig:
    """Merge config file and CLI flags (flags win) into a RunConfig."""
    cfg = load_config(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.runs is not None:
        cfg["runs"] = args.runs
    if args.out is not None:
        cfg["out"] = args.out
    if getattr(args, "particles", None) is not None:
        cfg["particles"] = args.particles
    if getattr(args, "q", None) is not None:
        cfg["q"] = args.q
    if getattr(args, "unknown_q", False):
        cfg["unknown_q"] = True

    if "seed" not in cfg:
        raise ConfigError("seed is mandatory (config key seed= or flag --seed)")

    unknown_q = bool(cfg.get("unknown_q", False))
    q_fixed = None if unknown_q else float(cfg.get("q", 5.0))
    try:
        sensor = SensorConfig(
            position=np.array([cfg.get("sensor_x", 0.0), cfg.get("sensor_y", 0.0)]),
            fov_deg=cfg.get("fov_deg", 360.0),
            angular_resolution_deg=cfg.get("angular_resolution_deg", 0.2),
            sigma_range=cfg.get("sigma_range", 0.01),
            sigma_bearing_deg=cfg.get("sigma_bearing_deg", 0.005),
            max_range=cfg.get("max_range", 200.0),
        )
        filt = FilterConfig(
            n_particles=int(cfg.get("particles", 1500 if unknown_q else 1000)),
            T=cfg.get("T", 0.1),
            sigma_phi=cfg.get("sigma_phi", float(np.pi / 36.0)),
            sigma_a=cfg.get("sigma_a", 2.0),
            sigma_lambda=cfg.get("sigma_lambda", 1e-4),
            sigma_q=cfg.get("sigma_q", 0.1),
            r_pseudo=cfg.get("r_pseudo", 0.09),
            r_scale=cfg.get("r_scale", 0.09),
            r_h_target=cfg.get("r_h", 0.09),
            margins=VisibilityMargins(cfg.get("eps1", 0.5), cfg.get("eps2", 0.5)),
            q_fixed=q_fixed,
            q_prior_mean=cfg.get("q_prior_mean", 2.0),
            q_prior_std=cfg.get("q_prior_std", 0.2),
            gamma_policy=cfg.get("gamma_policy", "fixed"),
        )
        return RunConfig(
            scenario=cfg.get("scenario"),
            data_path=Path(cfg["data"]) if "data" in cfg else None,
            sensor=sensor,
            filter=filt,
            n_runs=int(cfg.get("runs", 1)),
            seed=int(cfg["seed"]),
            output_dir=Path(cfg.get("out", "superett_out")),
            T=cfg.get("T", 0.1),
            target_d=(cfg.get("target_d1", 2.5), cfg.get("target_d2", 1.5)),
            target_q=cfg.get("target_q", 5.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _resolved_mapping(rc: RunConfig) -> dict:
    f, s = rc.filter, rc.sensor
    return {
        "scenario": rc.scenario or "",
        "data": rc.data_path or "",
        "seed": rc.seed,
        "runs": rc.n_runs,
        "out": rc.output_dir,
        "T": rc.T,
        "particles": f.n_particles,
        "unknown_q": str(f.unknown_q).lower(),
        "q": "" if f.unknown_q else f.q_fixed,
        "q_prior_mean": f.q_prior_mean,
        "q_prior_std": f.q_prior_std,
        "sigma_phi": f.sigma_phi,
        "sigma_a": f.sigma_a,
        "sigma_lambda": f.sigma_lambda,
        "sigma_q": f.sigma_q,
        "r_pseudo": f.r_pseudo,
        "r_scale": f.r_scale,
        "r_h": f.r_h_target,
        "eps1": f.margins.eps1,
        "eps2": f.margins.eps2,
        "gamma_policy": f.gamma_policy,
        "sensor_x": s.position[0],
        "sensor_y": s.position[1],
        "fov_deg": s.fov_deg,
        "angular_resolution_deg": s.angular_resolution_deg,
        "sigma_range": s.sigma_range,
        "sigma_bearing_deg": s.sigma_bearing_deg,
        "max_range": s.max_range,
        "target_d1": rc.target_d[0],
        "target_d2": rc.target_d[1],
        "target_q": rc.target_q,
    }


def _build_scenario(rc: RunConfig):
    return generate_scenario(rc.scenario, T=rc.T, d=rc.target_d, q=rc.target_q)


def _prepare_out(rc: RunConfig) -> Path:
    out = rc.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    sio.write_key_values(out / "config_resolved.txt", _resolved_mapping(rc))
    return out


def cmd_simulate(rc: RunConfig) -> int:
    """Write per-run scan files and the ground-truth table."""
    if rc.scenario is None:
        raise ConfigError("simulate requires a scenario")
    out = _prepare_out(rc)
    scenario = _build_scenario(rc)
    sio.write_truth_file(out / "truth.csv", scenario, {"scenario": scenario.name})

    from .lidar import polar_to_scan, scan_polar

    base_polar = [
        scan_polar(rc.sensor, scenario.extent_at(k)) for k in range(scenario.n_steps)
    ]
    children = np.random.SeedSequence(rc.seed).spawn(rc.n_runs)
    for run, child in enumerate(children):
        sim_ss, _ = child.spawn(2)
        rng = np.random.default_rng(sim_ss)
        scans = [
            polar_to_scan(rc.sensor, bearings, ranges, rng, k=k)
            for k, (bearings, ranges) in enumerate(base_polar)
        ]
        sio.write_scan_file(
            out / f"run{run:03d}_scans.txt",
            scans,
            {"scenario": scenario.name, "seed": rc.seed, "run": run},
        )
    print(f"wrote {rc.n_runs} scan file(s) and truth.csv to {out}")
    return EXIT_OK


def cmd_track(rc: RunConfig) -> int:
    """Track either simulated scenario runs or a recorded scan file."""
    out = _prepare_out(rc)
    header = {"seed": rc.seed, "q_fixed": "" if rc.filter.unknown_q else rc.filter.q_fixed}

    if rc.data_path is not None:
        _, scans = sio.read_scan_file(rc.data_path)
        if len(scans) < 2:
            raise sio.DataFormatError(f"{rc.data_path}: need at least two frames")
        rng = np.random.default_rng(np.random.SeedSequence(rc.seed))
        record = track_scans(scans, rc.filter, rng)
        sio.write_estimates_file(
            out / "run000_estimates.csv", record, rc.filter.unknown_q,
            {**header, "data": rc.data_path},
        )
        print(f"tracked {len(scans)} recorded frames; estimates in {out}")
        return EXIT_OK

    scenario = _build_scenario(rc)
    sio.write_truth_file(out / "truth.csv", scenario, {"scenario": scenario.name})
    result = run_monte_carlo(scenario, rc.filter, rc.sensor, rc.n_runs, rc.seed)
    for run, record in enumerate(result.records):
        if record.failed:
            (out / f"run{run:03d}_error.txt").write_text(record.error + "\n")
            continue
        sio.write_estimates_file(
            out / f"run{run:03d}_estimates.csv", record, rc.filter.unknown_q,
            {**header, "scenario": scenario.name, "run": run},
        )
    sio.write_metrics_file(
        out / "metrics.csv", result.report, result.n_runs, result.n_failed,
        {"scenario": scenario.name, "seed": rc.seed},
    )
    if result.n_failed == result.n_runs:
        raise DegenerateFilterError(f"all {result.n_runs} runs degenerated")
    r = result.report
    print(
        f"{scenario.name}: rmse_c={r.rmse_c:.4f} rmse_v={r.rmse_v:.4f} "
        f"rmse_d1={r.rmse_d1:.4f} rmse_d2={r.rmse_d2:.4f} iou={r.iou:.4f} "
        f"({result.n_failed}/{result.n_runs} failed)"
    )
    return EXIT_OK


def _extents_from_table(data: dict, q_fallback: float | None):
    from .geometry import SuperellipseExtent

    order = np.argsort(data["k"])
    q_col = data.get("q")
    extents = []
    for i in order:
        q = float(q_col[i]) if q_col is not None else q_fallback
        if q is None:
            raise sio.DataFormatError("no q column and no q_fixed header")
        extents.append(
            SuperellipseExtent(
                c=np.array([data["cx"][i], data["cy"][i]]),
                phi=float(data["phi"][i]),
                d=np.array([data["d1"][i], data["d2"][i]]),
                q=q,
            )
        )
    return order, extents


def cmd_eval(truth_path, estimate_paths, out_dir) -> int:
    """Recompute RMSE and IOU from serialized artifacts only."""
    _, truth = sio.read_truth_file(truth_path)
    t_order, t_extents = _extents_from_table(truth, None)
    t_k = truth["k"][t_order]

    err_c, err_v, err_d1, err_d2, ious = [], [], [], [], []
    for path in estimate_paths:
        header, est = sio.read_estimates_file(path)
        e_order, e_extents = _extents_from_table(
            est, float(header["q_fixed"]) if header.get("q_fixed") else None
        )
        e_k = est["k"][e_order]
        if e_k.shape != t_k.shape or not np.array_equal(e_k, t_k):
            raise sio.DataFormatError(
                f"{path}: estimate steps do not align with truth steps"
            )
        err_c.append(
            np.stack(
                [est["cx"][e_order] - truth["cx"][t_order],
                 est["cy"][e_order] - truth["cy"][t_order]], axis=-1,
            )
        )
        if "vx" in est:
            err_v.append(
                np.stack(
                    [est["vx"][e_order] - truth["vx"][t_order],
                     est["vy"][e_order] - truth["vy"][t_order]], axis=-1,
                )
            )
        err_d1.append(est["d1"][e_order] - truth["d1"][t_order])
        err_d2.append(est["d2"][e_order] - truth["d2"][t_order])
        ious.append([iou(e, t) for e, t in zip(e_extents, t_extents)])

    def pooled_rmse(errs):
        stacked = np.concatenate([np.asarray(e).reshape(len(e), -1) for e in errs])
        return float(np.sqrt((stacked ** 2).sum(axis=1).mean()))

    report = MetricsReport(
        rmse_c=pooled_rmse(err_c),
        rmse_v=pooled_rmse(err_v) if err_v else float("nan"),
        rmse_d1=pooled_rmse(err_d1),
        rmse_d2=pooled_rmse(err_d2),
        iou=float(np.mean(ious)),
        wall_time=0.0,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sio.write_metrics_file(out / "metrics_eval.csv", report, len(estimate_paths), 0)
    print(
        f"eval: rmse_c={report.rmse_c:.6f} rmse_v={report.rmse_v:.6f} "
        f"rmse_d1={report.rmse_d1:.6f} rmse_d2={report.rmse_d2:.6f} iou={report.iou:.6f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superett",
        description="Superelliptical extended-target tracking toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="flat key=value config file")
        p.add_argument("--seed", type=int, help="RNG seed (mandatory, here or in config)")
        p.add_argument("--runs", type=int, help="number of Monte Carlo runs")
        p.add_argument("--out", type=Path, help="output directory")

    p_sim = sub.add_parser("simulate", help="write simulated scan logs")
    add_common(p_sim)

    p_track = sub.add_parser("track", help="run the tracker on a scenario or scan log")
    add_common(p_track)
    p_track.add_argument("--unknown-q", dest="unknown_q", action="store_true",
                         help="estimate the shape exponent as part of the state")
    p_track.add_argument("--q", type=float, help="fixed shape exponent (known-q mode)")
    p_track.add_argument("--particles", type=int, help="number of particles")

    p_eval = sub.add_parser("eval", help="recompute metrics from serialized artifacts")
    p_eval.add_argument("--truth", type=Path, required=True)
    p_eval.add_argument("--estimates", type=Path, nargs="+", required=True)
    p_eval.add_argument("--out", type=Path, default=Path("superett_out"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return cmd_eval(args.truth, args.estimates, args.out)
        rc = resolve_run_config(args)
        if args.command == "simulate":
            return cmd_simulate(rc)
        return cmd_track(rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sio.DataFormatError, FileNotFoundError, InitializationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DegenerateFilterError as exc:
        print(f"degenerate filter: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
