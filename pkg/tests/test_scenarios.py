"""Ground-truth trajectory generation tests."""

import numpy as np
import pytest

from superett.scenarios import generate_scenario


class TestLinear:
    def test_step_count_and_positions(self):
        scen = generate_scenario("linear", T=0.1)
        assert scen.n_steps == 251
        ks = np.arange(251)
        assert np.allclose(scen.c[:, 0], -40.0 + 0.3 * ks, atol=1e-9)
        assert np.allclose(scen.c[:, 1], -10.0)
        assert np.allclose(scen.c[-1], [35.0, -10.0], atol=1e-9)

    def test_constant_velocity_and_heading(self):
        scen = generate_scenario("linear")
        assert np.allclose(scen.c_dot, [3.0, 0.0])
        assert np.allclose(scen.phi, 0.0)

    def test_finite_difference_velocity(self):
        scen = generate_scenario("linear")
        fd = np.diff(scen.c, axis=0) / scen.T
        assert np.allclose(fd, scen.c_dot[:-1], atol=1e-9)


class TestCurvedAndDrifting:
    def test_speed_constant(self):
        for name in ("curved", "drifting"):
            scen = generate_scenario(name)
            speeds = np.linalg.norm(scen.c_dot, axis=1)
            assert np.allclose(speeds, 3.0, atol=1e-9)

    def test_total_turn_angle(self):
        scen = generate_scenario("curved")
        assert scen.phi[0] == pytest.approx(0.0)
        assert scen.phi[-1] == pytest.approx(np.radians(30.0))

    def test_heading_matches_velocity_in_curved(self):
        scen = generate_scenario("curved")
        heading = np.arctan2(scen.c_dot[:, 1], scen.c_dot[:, 0])
        assert np.allclose(scen.phi, heading, atol=1e-12)

    def test_drift_angle_lags_velocity(self):
        scen = generate_scenario("drifting")
        heading = np.arctan2(scen.c_dot[:, 1], scen.c_dot[:, 0])
        lag = heading - scen.phi
        assert lag.max() == pytest.approx(np.radians(25.0), abs=1e-9)
        assert np.all(lag >= -1e-12)
        # drift only appears once the turn starts
        third = scen.n_steps // 3
        assert np.allclose(lag[: third - 1], 0.0, atol=1e-12)

    def test_straight_segment_finite_differences(self):
        scen = generate_scenario("curved")
        third = scen.n_steps // 3
        fd = np.diff(scen.c[: third - 1], axis=0) / scen.T
        speeds = np.linalg.norm(fd, axis=1)
        assert np.allclose(speeds, 3.0, atol=1e-6)

    def test_path_continuous(self):
        for name in ("curved", "drifting", "uturn"):
            scen = generate_scenario(name)
            gaps = np.linalg.norm(np.diff(scen.c, axis=0), axis=1)
            speed = np.linalg.norm(scen.c_dot[0])
            assert np.all(gaps <= speed * scen.T * 1.001)
            assert np.all(gaps >= speed * scen.T * 0.99)


class TestUTurn:
    def test_arc_step_count(self):
        scen = generate_scenario("uturn", T=0.1)
        on_circle = np.abs(np.linalg.norm(scen.c, axis=1) - 10.0) < 1e-9
        assert on_circle.sum() == 158

    def test_speed_and_duration(self):
        scen = generate_scenario("uturn")
        assert np.allclose(np.linalg.norm(scen.c_dot, axis=1), 2.0, atol=1e-9)
        assert scen.n_steps == 258

    def test_heading_tangent_on_arc(self):
        scen = generate_scenario("uturn")
        on_circle = np.abs(np.linalg.norm(scen.c, axis=1) - 10.0) < 1e-9
        heading = np.arctan2(scen.c_dot[:, 1], scen.c_dot[:, 0])
        hd = heading[on_circle]
        ph = scen.phi[on_circle]
        assert np.allclose(np.cos(hd - ph), 1.0, atol=1e-12)

    def test_straight_segments_flank_the_arc(self):
        scen = generate_scenario("uturn", straight_time=5.0)
        assert np.allclose(scen.c[0], [-10.0, -10.0], atol=1e-9)
        assert np.allclose(scen.c_dot[0], [2.0, 0.0])
        assert scen.c[-1, 1] == pytest.approx(10.0)
        assert np.allclose(scen.c_dot[-1], [-2.0, 0.0])


class TestScenarioPlumbing:
    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            generate_scenario("zigzag")

    def test_extent_template(self):
        scen = generate_scenario("linear", d=(3.0, 1.0), q=4.0)
        ext = scen.extent_at(0)
        assert np.allclose(ext.d, [3.0, 1.0])
        assert ext.q == 4.0
        assert np.allclose(ext.c, scen.c[0])

    def test_trajectory_lengths_consistent(self):
        for name in ("linear", "curved", "drifting", "uturn"):
            scen = generate_scenario(name)
            assert scen.c.shape == (scen.n_steps, 2)
            assert scen.phi.shape == (scen.n_steps,)
            assert scen.c_dot.shape == (scen.n_steps, 2)
