"""Deterministic vortex integration and the noiseless onset time.

Classical fixed-step RK4 on the drift field, dense storage of the full
trajectory (the covariance machinery in :mod:`rionset.asymptotics` re-reads
every stored state), and detection of the first upward crossing of the
onset level by the v component.  Crossing times are refined by linear
interpolation between the bracketing grid points, so the reported time is
accurate to O(dt^2) instead of the O(dt) bias of grid-point reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .defaults import DEFAULT_DT, DEFAULT_ELL, DEFAULT_PARAMS, DEFAULT_T_MAX, DEFAULT_X0, SWEEP_GRIDS
from .errors import BlowupError, ParameterError
from .msd import ModelParams, State, drift_scalar
from .tables import Table

__all__ = [
    "Trajectory",
    "DetOnset",
    "integrate_ode",
    "deterministic_onset_time",
    "onset_time_curves",
    "trajectory_table",
    "apply_sweep",
]


@dataclass(frozen=True)
class Trajectory:
    """A dense RK4 trajectory on the uniform grid ``t0 + k*dt``.

    ``states`` has one row per grid point and columns (u, v, b); it is
    marked read-only so trajectories can be shared across threads.
    """

    params: ModelParams
    dt: float
    states: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] != 3 or states.shape[0] < 1:
            raise ParameterError(f"states must have shape (n, 3) with n >= 1, got {states.shape}")
        if not np.isfinite(states).all():
            raise ParameterError("trajectory states must all be finite")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be finite and > 0, got {self.dt!r}")
        object.__setattr__(self, "states", states)
        states.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def t_final(self) -> float:
        return self.t0 + (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) * self.dt

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def b(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def final_state(self) -> State:
        """Last stored state; diagnostic for the trajectory's asymptotic v."""
        return State.from_array(self.states[-1])

    def interp_state(self, t: float) -> np.ndarray:
        """State at time ``t`` by linear interpolation on the grid."""
        if not (self.t0 - 1e-12 <= t <= self.t_final + 1e-12):
            raise ParameterError(f"t={t!r} outside trajectory range [{self.t0}, {self.t_final}]")
        if self.n_samples == 1:
            return self.states[0].copy()
        pos = min(max((t - self.t0) / self.dt, 0.0), float(self.n_samples - 1))
        k = min(int(pos), self.n_samples - 2)
        theta = pos - k
        return self.states[k] + theta * (self.states[k + 1] - self.states[k])


@dataclass(frozen=True)
class DetOnset:
    """Deterministic onset: crossing time and interpolated crossing state.

    ``time is None`` means the v component never reached the level within
    the stored horizon ("never" is a result, not an error: the caller may
    have chosen a level above the stable point).
    """

    time: float | None
    state: State | None = None

    @property
    def hit(self) -> bool:
        return self.time is not None


def integrate_ode(
    params: ModelParams = DEFAULT_PARAMS,
    x0: State = DEFAULT_X0,
    dt: float = DEFAULT_DT,
    t_max: float = DEFAULT_T_MAX,
) -> Trajectory:
    """Integrate the deterministic vortex ODE with classical RK4.

    Parameters
    ----------
    params, x0 : model parameters and initial state.
    dt : step size (> 0).
    t_max : horizon; the trajectory covers [0, t_max] with n = round(t_max/dt) steps.

    Returns
    -------
    Trajectory
        Dense storage of all n + 1 grid states.

    Raises
    ------
    BlowupError
        If a non-finite state is produced; carries the last valid time.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ParameterError(f"dt must be finite and > 0, got {dt!r}")
    if not (math.isfinite(t_max) and t_max >= dt):
        raise ParameterError(f"t_max must be finite and >= dt, got {t_max!r}")
    if not x0.is_finite:
        raise ParameterError(f"initial state must be finite, got {x0}")

    n_steps = int(round(t_max / dt))
    p, r, s = params.p, params.r, params.s
    u, v, b = x0.u, x0.v, x0.b
    out = np.empty((n_steps + 1, 3), dtype=float)
    out[0, 0] = u
    out[0, 1] = v
    out[0, 2] = b
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(n_steps):
        k1u, k1v, k1b = drift_scalar(p, r, s, u, v, b)
        k2u, k2v, k2b = drift_scalar(p, r, s, u + half * k1u, v + half * k1v, b + half * k1b)
        k3u, k3v, k3b = drift_scalar(p, r, s, u + half * k2u, v + half * k2v, b + half * k2b)
        k4u, k4v, k4b = drift_scalar(p, r, s, u + dt * k3u, v + dt * k3v, b + dt * k3b)
        u = u + sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        b = b + sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if not math.isfinite(u + v + b):
            raise BlowupError(f"non-finite state at t={(k + 1) * dt}", t_last=k * dt)
        out[k + 1, 0] = u
        out[k + 1, 1] = v
        out[k + 1, 2] = b
    return Trajectory(params=params, dt=dt, states=out)


def deterministic_onset_time(traj: Trajectory, ell: float = DEFAULT_ELL) -> DetOnset:
    """First time the trajectory's v component crosses ``ell`` from below.

    The crossing time is refined by linear interpolation between the
    bracketing grid points, so the v component of the returned state equals
    ``ell`` to interpolation accuracy (~1e-9).  A start already at or above
    the level reports time 0.
    """
    if not (math.isfinite(ell) and ell > 0):
        raise ParameterError(f"ell must be finite and > 0, got {ell!r}")
    v = traj.v
    if v[0] >= ell:
        return DetOnset(time=traj.t0, state=State.from_array(traj.states[0]))
    crossings = np.nonzero((v[:-1] < ell) & (v[1:] >= ell))[0]
    if crossings.size == 0:
        return DetOnset(time=None, state=None)
    k = int(crossings[0])
    theta = (ell - v[k]) / (v[k + 1] - v[k])
    time = traj.t0 + (k + theta) * traj.dt
    state = traj.states[k] + theta * (traj.states[k + 1] - traj.states[k])
    return DetOnset(time=float(time), state=State.from_array(state))


def apply_sweep(
    sweep: str, value: float, params: ModelParams, x0: State
) -> tuple[ModelParams, State]:
    if sweep == "v0":
        return params, State(x0.u, float(value), x0.b)
    if sweep == "s":
        return ModelParams(params.p, params.r, float(value)), x0
    if sweep == "r":
        return ModelParams(params.p, float(value), params.s), x0
    if sweep == "p":
        return ModelParams(float(value), params.r, params.s), x0
    raise ParameterError(f"unknown sweep parameter {sweep!r} (expected v0, s, r, or p)")


def onset_time_curves(
    sweep: str,
    values: Sequence[float] | None = None,
    *,
    params: ModelParams = DEFAULT_PARAMS,
    x0: State = DEFAULT_X0,
    ell: float = DEFAULT_ELL,
    dt: float = DEFAULT_DT,
    t_max: float = DEFAULT_T_MAX,
) -> Table:
    """Deterministic onset time against one swept parameter.

    Sweeps one of ``v0``, ``s``, ``r``, ``p`` while holding everything else
    fixed; a missing crossing is reported as NaN.
    """
    if values is None:
        values = SWEEP_GRIDS[sweep]
    rows = []
    for value in values:
        params_i, x0_i = apply_sweep(sweep, value, params, x0)
        onset = deterministic_onset_time(integrate_ode(params_i, x0_i, dt, t_max), ell)
        rows.append((float(value), onset.time if onset.hit else math.nan))
    return Table(columns=("sweep_value", "onset_time"), rows=rows)


def trajectory_table(traj: Trajectory) -> Table:
    """Trajectory as a (t, u, v, b) table for CSV export."""
    times = traj.times
    rows = [
        (float(times[k]), float(traj.states[k, 0]), float(traj.states[k, 1]), float(traj.states[k, 2]))
        for k in range(traj.n_samples)
    ]
    return Table(columns=("t", "u", "v", "b"), rows=rows)
