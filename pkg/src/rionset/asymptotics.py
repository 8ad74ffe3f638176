"""Small-noise Gaussian approximation of the onset-time distribution.

Linearizing the stochastic dynamics around the deterministic trajectory
gives fluctuations with covariance ``Sigma(t)`` solving the matrix ODE

    dSigma/dt = I + A(t) Sigma + Sigma A(t)^T,    Sigma(0) = 0,

where ``A(t)`` is the drift Jacobian along the stored deterministic
trajectory.  Projecting the fluctuation at the deterministic onset time
``T`` onto the crossing direction yields a centered Gaussian for the scaled
onset-time error, with variance

    eps^2 * Sigma_22(T) / (ell^2 * (u(T) + ell)^2).

The ODE is integrated directly (never through the matrix-exponential
representation, which is kept only as a test oracle for constant ``A``):
RK4 on the trajectory grid, with the Jacobian at stage midpoints taken from
linearly interpolated states, and an explicit symmetrization each step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .defaults import DEFAULT_DT, DEFAULT_ELL, DEFAULT_PARAMS, DEFAULT_T_MAX, DEFAULT_X0, SWEEP_GRIDS
from .detode import Trajectory, apply_sweep, deterministic_onset_time, integrate_ode
from .errors import DegenerateDistributionError, NoOnsetError, ParameterError
from .msd import ModelParams, State, jacobian_array
from .tables import Table

__all__ = [
    "OnsetGaussian",
    "integrate_sigma",
    "onset_variance",
    "gaussian_onset_pdf",
    "h_of_T_curves",
]


@dataclass(frozen=True)
class OnsetGaussian:
    """Gaussian approximation of the onset time: mean T and its variance.

    ``sigma22`` and ``u_hit`` are the ingredients of the variance formula;
    ``h_factor`` is the noise-free factor variance / eps^2.
    """

    mean: float
    variance: float
    sigma22: float
    u_hit: float
    h_factor: float


def _rk4_sigma_step(
    sigma: np.ndarray, a0: np.ndarray, a_mid: np.ndarray, a1: np.ndarray, h: float, eye: np.ndarray
) -> np.ndarray:
    # RHS written as I + M + M^T with M = A @ Sigma, valid because every
    # stage value of Sigma is symmetric; this keeps symmetry exact.
    m = a0 @ sigma
    k1 = eye + m + m.T
    stage = sigma + (0.5 * h) * k1
    m = a_mid @ stage
    k2 = eye + m + m.T
    stage = sigma + (0.5 * h) * k2
    m = a_mid @ stage
    k3 = eye + m + m.T
    stage = sigma + h * k3
    m = a1 @ stage
    k4 = eye + m + m.T
    sigma = sigma + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (sigma + sigma.T)


def integrate_sigma(
    traj: Trajectory,
    t_end: float,
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Integrate the fluctuation-covariance ODE along a trajectory.

    Parameters
    ----------
    traj : the stored deterministic trajectory supplying the states at which
        the Jacobian is evaluated.
    t_end : end time inside the trajectory range; a trailing partial step is
        taken when it falls between grid points.
    jacobian_fn : optional override mapping a state row (3,) to a 3x3
        matrix; defaults to the analytic vortex Jacobian for
        ``traj.params``.  Used by tests to drive the ODE with synthetic
        coefficient matrices.

    Returns
    -------
    numpy.ndarray
        The symmetric 3x3 covariance at ``t_end``.
    """
    if not (math.isfinite(t_end) and traj.t0 - 1e-12 <= t_end <= traj.t_final + 1e-9):
        raise ParameterError(
            f"t_end={t_end!r} outside trajectory range [{traj.t0}, {traj.t_final}]"
        )
    dt = traj.dt
    states = traj.states
    m_samples = traj.n_samples
    pos = (t_end - traj.t0) / dt
    n_full = int(math.floor(pos))
    if n_full >= m_samples - 1:
        n_full = m_samples - 1
    rem = t_end - (traj.t0 + n_full * dt)
    if rem < 1e-12:
        rem = 0.0

    if jacobian_fn is None:
        p, r, s = traj.params.p, traj.params.r, traj.params.s
        a_grid = jacobian_array(p, r, s, states)
        mid_states = 0.5 * (states[:-1] + states[1:]) if m_samples > 1 else states[:0]
        a_mid = jacobian_array(p, r, s, mid_states)
    else:
        a_grid = np.stack([np.asarray(jacobian_fn(states[k]), dtype=float) for k in range(m_samples)])
        a_mid = np.stack(
            [np.asarray(jacobian_fn(0.5 * (states[k] + states[k + 1])), dtype=float) for k in range(m_samples - 1)]
        ) if m_samples > 1 else a_grid[:0]

    eye = np.eye(3)
    sigma = np.zeros((3, 3))
    for k in range(n_full):
        sigma = _rk4_sigma_step(sigma, a_grid[k], a_mid[k], a_grid[k + 1], dt, eye)
    if rem > 0.0:
        k = n_full
        seg = states[k + 1] - states[k]
        x_mid = states[k] + (0.5 * rem / dt) * seg
        x_end = states[k] + (rem / dt) * seg
        if jacobian_fn is None:
            a_mid_partial = jacobian_array(p, r, s, x_mid)
            a_end_partial = jacobian_array(p, r, s, x_end)
        else:
            a_mid_partial = np.asarray(jacobian_fn(x_mid), dtype=float)
            a_end_partial = np.asarray(jacobian_fn(x_end), dtype=float)
        sigma = _rk4_sigma_step(sigma, a_grid[k], a_mid_partial, a_end_partial, rem, eye)
    return sigma


def onset_variance(
    params: ModelParams = DEFAULT_PARAMS,
    x0: State = DEFAULT_X0,
    ell: float = DEFAULT_ELL,
    epsilon: float = 1e-3,
    dt: float = DEFAULT_DT,
    t_max: float = DEFAULT_T_MAX,
) -> OnsetGaussian:
    """Gaussian onset-time approximation for a given start and noise level.

    Integrates the deterministic trajectory, finds the onset time T and the
    interpolated u(T), integrates the covariance ODE up to T, and assembles
    the variance ``eps^2 Sigma_22(T) / (ell^2 (u(T) + ell)^2)``.

    Raises
    ------
    NoOnsetError
        If the deterministic trajectory never reaches the level within
        ``t_max`` (the approximation has no center to expand around).
    """
    traj = integrate_ode(params, x0, dt, t_max)
    onset = deterministic_onset_time(traj, ell)
    if not onset.hit:
        raise NoOnsetError(
            f"deterministic trajectory never reaches ell={ell} within t_max={t_max}"
        )
    sigma = integrate_sigma(traj, onset.time)
    sigma22 = float(sigma[1, 1])
    u_hit = onset.state.u
    h_factor = sigma22 / (ell * ell * (u_hit + ell) ** 2)
    return OnsetGaussian(
        mean=onset.time,
        variance=epsilon * epsilon * h_factor,
        sigma22=sigma22,
        u_hit=u_hit,
        h_factor=h_factor,
    )


def gaussian_onset_pdf(gauss: OnsetGaussian, t: float | np.ndarray) -> float | np.ndarray:
    """Density of the Gaussian onset-time approximation at ``t``.

    Raises
    ------
    DegenerateDistributionError
        If the variance is zero (the approximation is a point mass at T).
    """
    if gauss.variance < 0 or not math.isfinite(gauss.variance):
        raise ParameterError(f"variance must be finite and >= 0, got {gauss.variance!r}")
    if gauss.variance == 0.0:
        raise DegenerateDistributionError("zero variance: onset time is a point mass at the mean")
    z = (np.asarray(t, dtype=float) - gauss.mean)
    dens = np.exp(-0.5 * z * z / gauss.variance) / math.sqrt(2.0 * math.pi * gauss.variance)
    return float(dens) if np.isscalar(t) else dens


def h_of_T_curves(
    sweep: str,
    values: Sequence[float] | None = None,
    *,
    params: ModelParams = DEFAULT_PARAMS,
    x0: State = DEFAULT_X0,
    ell: float = DEFAULT_ELL,
    dt: float = DEFAULT_DT,
    t_max: float = DEFAULT_T_MAX,
    epsilon: float = 1e-3,
) -> Table:
    """Noise-free variance factor H(T) along the standard parameter sweeps.

    Produces one row per sweep value with the onset time, the interpolated
    u at onset, Sigma_22(T), H(T), and the variance at the requested noise
    amplitude.  Sweep points whose trajectory never reaches the level get
    NaN rows rather than failing the whole sweep.
    """
    if values is None:
        values = SWEEP_GRIDS[sweep]
    rows = []
    for value in values:
        params_i, x0_i = apply_sweep(sweep, value, params, x0)
        try:
            gauss = onset_variance(params_i, x0_i, ell, epsilon, dt, t_max)
        except NoOnsetError:
            rows.append((float(value), math.nan, math.nan, math.nan, math.nan, math.nan))
            continue
        rows.append(
            (float(value), gauss.mean, gauss.u_hit, gauss.sigma22, gauss.h_factor, gauss.variance)
        )
    return Table(
        columns=("sweep_value", "onset_time", "u_at_onset", "sigma22", "h_factor", "variance"),
        rows=rows,
    )
