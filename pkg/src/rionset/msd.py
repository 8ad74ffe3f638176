"""Domain types and the cyclonic vortex drift field.

The model lives in a 3-D phase space ``(u, v, b)``: nondimensional maximum
radial wind, maximum tangential wind, and warm-core anomaly.  On the cyclonic
branch (``v > 0``) the drift is

    du/dt = p v^2 - (p + 1) b - u v
    dv/dt = -u v - v^2
    db/dt = b u + s u + v - r b

with positive parameters ``p`` (squared troposphere/boundary-layer depth
ratio), ``s`` (static stability) and ``r`` (Newtonian cooling).  Everything
here is a pure function of ``(params, state)`` so trajectories can be run
concurrently without shared state.

The scalar helpers (``drift_scalar`` and friends) and the array helpers
(``drift_array``, ``jacobian_array``) evaluate the same expression trees
term for term; the integrators rely on this for bit-identical results
between the scalar and vectorized code paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "ModelParams",
    "State",
    "NoiseConfig",
    "drift",
    "jacobian",
    "drift_scalar",
    "drift_array",
    "jacobian_array",
]

_MAX_SEED = 2**64


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless vortex parameters; all three must be positive."""

    p: float
    r: float
    s: float

    def __post_init__(self) -> None:
        for name in ("p", "r", "s"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class State:
    """A point (u, v, b) in phase space."""

    u: float
    v: float
    b: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.b)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.b], dtype=float)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "State":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.u) and math.isfinite(self.v) and math.isfinite(self.b)


@dataclass(frozen=True)
class NoiseConfig:
    """Additive-noise configuration for one trajectory.

    ``epsilon = 0`` must (and does) reproduce the deterministic integrator
    bit for bit under the RK4-plus-noise stepper.  ``seed`` is the 64-bit
    master seed of the ensemble; ``stream_index`` selects the trajectory's
    dedicated counter-based stream.
    """

    epsilon: float
    seed: int = 0
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ParameterError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < _MAX_SEED):
            raise ParameterError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if not (isinstance(self.stream_index, int) and 0 <= self.stream_index < _MAX_SEED):
            raise ParameterError(f"stream_index must be a nonnegative 64-bit integer, got {self.stream_index!r}")


def drift_scalar(
    p: float, r: float, s: float, u: float, v: float, b: float
) -> tuple[float, float, float]:
    """Drift components at (u, v, b); the hot path for scalar integration."""
    return (
        p * v * v - (p + 1.0) * b - u * v,
        -u * v - v * v,
        b * u + s * u + v - r * b,
    )


def drift_array(p: float, r: float, s: float, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Drift evaluated on an array of states with shape ``(..., 3)``.

    Mirrors :func:`drift_scalar` expression for expression so both paths
    round identically.
    """
    u = x[..., 0]
    v = x[..., 1]
    b = x[..., 2]
    if out is None:
        out = np.empty_like(x)
    out[..., 0] = p * v * v - (p + 1.0) * b - u * v
    out[..., 1] = -u * v - v * v
    out[..., 2] = b * u + s * u + v - r * b
    return out


def drift(params: ModelParams, x: State) -> State:
    """Evaluate the drift vector field at a single state.

    Parameters
    ----------
    params : ModelParams
        Vortex parameters (p, r, s).
    x : State
        Phase-space point; must be finite.

    Returns
    -------
    State
        The drift vector (du/dt, dv/dt, db/dt).

    Raises
    ------
    ParameterError
        If any component of ``x`` is NaN or infinite.
    """
    if not x.is_finite:
        raise ParameterError(f"drift requires a finite state, got {x}")
    mu1, mu2, mu3 = drift_scalar(params.p, params.r, params.s, x.u, x.v, x.b)
    return State(mu1, mu2, mu3)


def jacobian_array(p: float, r: float, s: float, x: np.ndarray) -> np.ndarray:
    """Jacobian of the drift on an array of states; output shape ``(..., 3, 3)``."""
    u = x[..., 0]
    v = x[..., 1]
    b = x[..., 2]
    out = np.empty(x.shape[:-1] + (3, 3), dtype=float)
    out[..., 0, 0] = -v
    out[..., 0, 1] = 2.0 * p * v - u
    out[..., 0, 2] = -(p + 1.0)
    out[..., 1, 0] = -v
    out[..., 1, 1] = -u - 2.0 * v
    out[..., 1, 2] = 0.0
    out[..., 2, 0] = b + s
    out[..., 2, 1] = 1.0
    out[..., 2, 2] = u - r
    return out


def jacobian(params: ModelParams, x: State) -> np.ndarray:
    """Analytic Jacobian matrix of the drift at a single state.

    Row ``i`` contains the partial derivatives of drift component ``i``
    with respect to (u, v, b):

        [[-v,    2 p v - u,  -(p + 1)],
         [-v,    -u - 2 v,    0      ],
         [b + s,  1,          u - r  ]]

    Raises
    ------
    ParameterError
        If any component of ``x`` is NaN or infinite.
    """
    if not x.is_finite:
        raise ParameterError(f"jacobian requires a finite state, got {x}")
    return jacobian_array(params.p, params.r, params.s, x.as_array())
