from __future__ import annotations

import math

import numpy as np
import pytest

from rionset import (
    DEFAULT_PARAMS,
    DEFAULT_X0,
    BlowupError,
    ModelParams,
    ParameterError,
    State,
    deterministic_onset_time,
    integrate_ode,
    onset_time_curves,
)
from rionset.detode import Trajectory, trajectory_table


def _integrate_v(v0: float, dt: float, t_end: float) -> float:
    traj = integrate_ode(DEFAULT_PARAMS, State(DEFAULT_X0.u, v0, DEFAULT_X0.b), dt, t_end)
    return float(traj.v[-1])


class TestIntegrateOde:
    def test_critical_point_stays_fixed(self):
        traj = integrate_ode(DEFAULT_PARAMS, State(0.0, 0.0, 0.0), dt=1e-3, t_max=0.5)
        assert np.all(traj.states == 0.0)

    def test_default_run_crosses_onset_level(self, default_trajectory):
        v = default_trajectory.v
        assert v[0] == 0.01
        assert v.max() > 0.1
        # eventually increasing: strictly rising over the last stretch
        tail = v[-2000:]
        assert np.all(np.diff(tail) > 0) or tail[-1] > 0.5

    def test_step_halving_leaves_state_unchanged_at_fixed_time(self):
        v_a = _integrate_v(0.01, 1e-3, 5.0)
        v_b = _integrate_v(0.01, 5e-4, 5.0)
        assert abs(v_a - v_b) < 1e-8

    def test_fourth_order_self_convergence(self):
        # Errors against a dt/16 reference must shrink ~16x per halving.
        t_end = 12.0
        dts = (4e-3, 2e-3)
        ref = _integrate_v(0.01, dts[1] / 16.0, t_end)
        errors = [abs(_integrate_v(0.01, dt, t_end) - ref) for dt in dts]
        order = math.log2(errors[0] / errors[1])
        assert 3.5 <= order <= 4.5

    def test_blowup_raises_with_last_valid_time(self):
        with pytest.raises(BlowupError) as info:
            integrate_ode(DEFAULT_PARAMS, State(-1e160, 0.01, 1e-4), dt=1e-3, t_max=1.0)
        assert info.value.t_last >= 0.0

    def test_invalid_grid_rejected(self):
        with pytest.raises(ParameterError):
            integrate_ode(DEFAULT_PARAMS, DEFAULT_X0, dt=0.0, t_max=1.0)
        with pytest.raises(ParameterError):
            integrate_ode(DEFAULT_PARAMS, DEFAULT_X0, dt=1e-3, t_max=1e-4)


class TestOnsetTime:
    def test_constant_trajectory_below_level_never_hits(self):
        states = np.tile([0.0, 0.05, 0.0], (100, 1))
        traj = Trajectory(params=DEFAULT_PARAMS, dt=1e-3, states=states)
        onset = deterministic_onset_time(traj, ell=0.1)
        assert not onset.hit
        assert onset.time is None

    def test_start_exactly_at_level(self):
        states = np.tile([0.0, 0.1, 0.0], (10, 1))
        traj = Trajectory(params=DEFAULT_PARAMS, dt=1e-3, states=states)
        onset = deterministic_onset_time(traj, ell=0.1)
        assert onset.time == 0.0
        assert onset.state.v == 0.1

    def test_default_run_has_expected_onset_time(self, default_onset):
        # Frozen from a dt-refinement study of this integrator (dt and dt/2
        # agree to ~2e-9), regression guard only.
        assert default_onset.time == pytest.approx(10.5279093530, abs=1e-6)

    def test_interpolated_crossing_sits_on_level(self, default_onset):
        assert abs(default_onset.state.v - 0.1) <= 1e-9

    def test_onset_time_decreases_with_initial_wind(self):
        grid = [0.005 * k for k in range(1, 19)]
        times = []
        for v0 in grid:
            traj = integrate_ode(DEFAULT_PARAMS, State(DEFAULT_X0.u, v0, DEFAULT_X0.b), 1e-3, 50.0)
            onset = deterministic_onset_time(traj, 0.1)
            assert onset.hit
            times.append(onset.time)
        assert all(a > b for a, b in zip(times, times[1:]))


class TestOnsetTimeCurves:
    def test_sweep_s_increases_onset_time(self):
        table = onset_time_curves("s", [0.05, 0.1, 0.2, 0.3])
        times = [row[1] for row in table.rows]
        assert all(a < b for a, b in zip(times, times[1:]))

    def test_sweep_r_increases_onset_time(self):
        table = onset_time_curves("r", [0.1, 0.25, 0.4])
        times = [row[1] for row in table.rows]
        assert all(a < b for a, b in zip(times, times[1:]))

    def test_sweep_p_decreases_onset_time(self):
        table = onset_time_curves("p", [100.0, 200.0, 300.0])
        times = [row[1] for row in table.rows]
        assert all(a > b for a, b in zip(times, times[1:]))

    def test_unknown_sweep_rejected(self):
        with pytest.raises(ParameterError):
            onset_time_curves("b0", [1.0])


class TestTrajectoryType:
    def test_validation(self):
        with pytest.raises(ParameterError):
            Trajectory(params=DEFAULT_PARAMS, dt=1e-3, states=np.empty((0, 3)))
        with pytest.raises(ParameterError):
            Trajectory(params=DEFAULT_PARAMS, dt=-1.0, states=np.zeros((2, 3)))
        with pytest.raises(ParameterError):
            Trajectory(params=DEFAULT_PARAMS, dt=1e-3, states=np.full((2, 3), np.nan))

    def test_states_are_read_only(self, default_trajectory):
        with pytest.raises(ValueError):
            default_trajectory.states[0, 0] = 1.0

    def test_interp_state_matches_grid_points(self, default_trajectory):
        np.testing.assert_array_equal(
            default_trajectory.interp_state(5 * default_trajectory.dt),
            default_trajectory.states[5],
        )

    def test_csv_table_layout(self, tmp_path, default_trajectory):
        table = trajectory_table(default_trajectory)
        out = tmp_path / "traj.csv"
        table.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,u,v,b"
        assert len(lines) == default_trajectory.n_samples + 1
        # 17 significant digits round-trip exactly
        first = lines[2].split(",")
        assert float(first[1]) == default_trajectory.states[1, 0]
