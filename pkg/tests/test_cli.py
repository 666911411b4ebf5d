"""Command-line interface tests: commands, exit codes, pipeline determinism."""

import numpy as np
import pytest

from superett.cli import EXIT_CONFIG, EXIT_DATA, main
from superett.io import read_estimates_file, read_metrics_file, read_scan_file


def write_config(tmp_path, **overrides):
    entries = {
        "scenario": "linear",
        "seed": 7,
        "runs": 1,
        "particles": 150,
    }
    entries.update(overrides)
    path = tmp_path / "config.txt"
    path.write_text("".join(f"{k}={v}\n" for k, v in entries.items()))
    return path


def short_linear(tmp_path, **overrides):
    # a short, near-sensor pass keeps CLI tests quick
    return write_config(tmp_path, **overrides)


class TestSimulate:
    def test_writes_expected_frames(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        _, scans = read_scan_file(out / "run000_scans.txt")
        assert len(scans) == 251
        assert (out / "truth.csv").exists()
        assert (out / "config_resolved.txt").exists()

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out_b)]) == 0
        fa = (out_a / "run000_scans.txt").read_bytes()
        fb = (out_b / "run000_scans.txt").read_bytes()
        assert fa == fb

    def test_fov_excluding_target_still_succeeds(self, tmp_path):
        # target sits at negative x; a narrow forward fov never sees it
        cfg = write_config(tmp_path, fov_deg=10.0)
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        _, scans = read_scan_file(out / "run000_scans.txt")
        assert all(len(s) == 0 for s in scans[:50])


class TestTrack:
    def test_scenario_track_outputs(self, tmp_path):
        cfg = write_config(tmp_path, scenario="uturn")
        out = tmp_path / "out"
        assert main(["track", "--config", str(cfg), "--out", str(out)]) == 0
        header, est = read_estimates_file(out / "run000_estimates.csv")
        assert est["k"].size == 258
        assert "q" not in est  # known-q log keeps the exponent in the header
        assert header["q_fixed"] == "5.0"
        _, metrics = read_metrics_file(out / "metrics.csv")
        for field in ("rmse_c", "rmse_v", "rmse_d1", "rmse_d2", "iou"):
            assert np.isfinite(metrics[field])

    def test_recorded_replay(self, tmp_path):
        cfg = write_config(tmp_path)
        sim_out = tmp_path / "sim"
        assert main(["simulate", "--config", str(cfg), "--out", str(sim_out)]) == 0
        replay_cfg = tmp_path / "replay.txt"
        replay_cfg.write_text(
            f"data={sim_out / 'run000_scans.txt'}\nseed=3\nparticles=150\n"
        )
        out = tmp_path / "replay_out"
        assert main(["track", "--config", str(replay_cfg), "--out", str(out)]) == 0
        _, est = read_estimates_file(out / "run000_estimates.csv")
        assert est["k"].size == 251
        assert np.all(np.isfinite(est["d1"]))

    def test_unknown_q_flag_adds_column(self, tmp_path):
        cfg = write_config(tmp_path, scenario="linear", particles=200)
        out = tmp_path / "out"
        assert main([
            "track", "--config", str(cfg), "--out", str(out), "--unknown-q", "--seed", "5",
        ]) == 0
        header, est = read_estimates_file(out / "run000_estimates.csv")
        assert header["unknown_q"] == "true"
        assert "q" in est
        assert np.all(est["q"] > 0)


class TestEval:
    def test_truth_vs_itself(self, tmp_path):
        # hand-built tables: estimates identical to truth
        truth = tmp_path / "truth.csv"
        truth.write_text(
            "k,cx,cy,phi,d1,d2,q,vx,vy\n"
            "0,0,0,0,2.5,1.5,5,3,0\n"
            "1,0.3,0,0,2.5,1.5,5,3,0\n"
        )
        est = tmp_path / "est.csv"
        est.write_text(
            "# q_fixed=5\n"
            "k,cx,cy,phi,d1,d2,vx,vy\n"
            "0,0,0,0,2.5,1.5,3,0\n"
            "1,0.3,0,0,2.5,1.5,3,0\n"
        )
        out = tmp_path / "out"
        assert main(["eval", "--truth", str(truth), "--estimates", str(est), "--out", str(out)]) == 0
        _, metrics = read_metrics_file(out / "metrics_eval.csv")
        assert metrics["rmse_c"] == 0.0
        assert metrics["rmse_v"] == 0.0
        assert metrics["iou"] == pytest.approx(1.0, abs=1e-3)

    def test_hand_built_offsets(self, tmp_path):
        # oracle: per-step centroid errors 3 and 4 give sqrt(12.5)
        truth = tmp_path / "truth.csv"
        truth.write_text(
            "k,cx,cy,phi,d1,d2,q,vx,vy\n"
            "0,0,0,0,2.5,1.5,5,0,0\n"
            "1,0,0,0,2.5,1.5,5,0,0\n"
        )
        est = tmp_path / "est.csv"
        est.write_text(
            "# q_fixed=5\n"
            "k,cx,cy,phi,d1,d2,vx,vy\n"
            "0,3,0,0,2.5,1.5,0,0\n"
            "1,0,4,0,2.5,1.5,0,0\n"
        )
        out = tmp_path / "out"
        assert main(["eval", "--truth", str(truth), "--estimates", str(est), "--out", str(out)]) == 0
        _, metrics = read_metrics_file(out / "metrics_eval.csv")
        assert metrics["rmse_c"] == pytest.approx(np.sqrt(12.5), rel=1e-6)

    def test_shuffled_rows_same_report(self, tmp_path):
        truth = tmp_path / "truth.csv"
        truth.write_text(
            "k,cx,cy,phi,d1,d2,q,vx,vy\n"
            "0,0,0,0,2.5,1.5,5,0,0\n"
            "1,1,0,0,2.5,1.5,5,0,0\n"
            "2,2,0,0,2.5,1.5,5,0,0\n"
        )
        rows = [
            "0,0.5,0,0,2.5,1.5,0,0",
            "1,1.5,0,0,2.5,1.5,0,0",
            "2,2.5,0,0,2.5,1.5,0,0",
        ]
        est_a = tmp_path / "a.csv"
        est_a.write_text("# q_fixed=5\nk,cx,cy,phi,d1,d2,vx,vy\n" + "\n".join(rows) + "\n")
        est_b = tmp_path / "b.csv"
        est_b.write_text("# q_fixed=5\nk,cx,cy,phi,d1,d2,vx,vy\n" + "\n".join(rows[::-1]) + "\n")
        out_a, out_b = tmp_path / "oa", tmp_path / "ob"
        assert main(["eval", "--truth", str(truth), "--estimates", str(est_a), "--out", str(out_a)]) == 0
        assert main(["eval", "--truth", str(truth), "--estimates", str(est_b), "--out", str(out_b)]) == 0
        assert (out_a / "metrics_eval.csv").read_bytes() == (out_b / "metrics_eval.csv").read_bytes()

    def test_misaligned_steps_rejected(self, tmp_path):
        truth = tmp_path / "truth.csv"
        truth.write_text("k,cx,cy,phi,d1,d2,q,vx,vy\n0,0,0,0,2.5,1.5,5,0,0\n")
        est = tmp_path / "est.csv"
        est.write_text("# q_fixed=5\nk,cx,cy,phi,d1,d2,vx,vy\n5,0,0,0,2.5,1.5,0,0\n")
        out = tmp_path / "out"
        code = main(["eval", "--truth", str(truth), "--estimates", str(est), "--out", str(out)])
        assert code == EXIT_DATA


class TestExitCodes:
    def test_missing_seed_is_config_error(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("scenario=linear\n")
        assert main(["track", "--config", str(cfg)]) == EXIT_CONFIG

    def test_unknown_key_is_config_error(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("scenario=linear\nseed=1\nbogus=1\n")
        assert main(["track", "--config", str(cfg)]) == EXIT_CONFIG

    def test_scenario_and_data_exclusive(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("scenario=linear\ndata=whatever.txt\nseed=1\n")
        assert main(["track", "--config", str(cfg)]) == EXIT_CONFIG

    def test_missing_data_file_is_data_error(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text(f"data={tmp_path / 'missing.txt'}\nseed=1\n")
        assert main(["track", "--config", str(cfg), "--out", str(tmp_path / 'o')]) == EXIT_DATA

    def test_pipeline_determinism(self, tmp_path):
        cfg = write_config(tmp_path, scenario="linear", particles=120, runs=2)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["track", "--config", str(cfg), "--out", str(out)]) == 0
            assert main([
                "eval", "--truth", str(out / "truth.csv"),
                "--estimates", str(out / "run000_estimates.csv"), str(out / "run001_estimates.csv"),
                "--out", str(out),
            ]) == 0
        assert (out_a / "metrics_eval.csv").read_bytes() == (out_b / "metrics_eval.csv").read_bytes()
