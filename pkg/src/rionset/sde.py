"""Stochastic trajectory integration with boundary-hitting detection.

The process solves ``dX = mu(X) dt + eps dW`` with three independent Wiener
components.  Two steppers are provided: explicit Euler-Maruyama, and the
default scheme that advances the deterministic part with one classical RK4
step and adds the Gaussian increment ``eps * sqrt(dt) * xi`` afterwards
(fourth order in the drift, strong order 1 overall, which is the best an
additive-noise scheme of this family can do).

Reproducibility contract
------------------------
Every trajectory owns a dedicated counter-based Philox stream keyed by
``(master seed, stream index)``, and consumes it in fixed blocks of
``NOISE_BLOCK`` steps.  The Gaussian increment used at step ``k`` of stream
``i`` is therefore a pure function of ``(seed, i, k)``: outcomes do not
depend on how many trajectories run together, in which order, or on how
many worker threads the ensemble uses.  The scalar path
(:func:`run_to_hit`) and the vectorized path (:func:`run_batch`) evaluate
identical floating-point expression trees, so the same stream produces
bit-identical outcomes through either.

A trajectory is stopped the first time its v component reaches the onset
level from inside (outcome ``ONSET``) or falls to zero (``EXTINCTION``);
the sub-step crossing time is refined by linear interpolation across the
crossing step.  Trajectories that reach neither level by the horizon are
reported ``CENSORED`` at exactly ``t_max``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .defaults import DEFAULT_DT, DEFAULT_ELL, DEFAULT_T_MAX
from .errors import BlowupError, ParameterError
from .msd import ModelParams, NoiseConfig, State, drift_array, drift_scalar

__all__ = [
    "StepperKind",
    "OutcomeKind",
    "HittingOutcome",
    "NOISE_BLOCK",
    "step",
    "run_to_hit",
    "run_batch",
]

# Noise is pre-drawn in fixed blocks of this many steps per trajectory.
# Changing it would change which Gaussian lands on which step, so it is a
# constant of the file format-level reproducibility contract, not a tunable.
NOISE_BLOCK = 4096

# Batch-internal row grouping (sized so one pre-drawn noise block stays under
# a memory budget) and dead-row compaction cadence.  Both are pure performance
# knobs: trajectories are row-independent and each owns its noise stream, so
# neither changes any outcome bit.
_NOISE_BUDGET_BYTES = 128 << 20
_COMPACT_EVERY = 128


def _row_group_size(d: int) -> int:
    return max(256, _NOISE_BUDGET_BYTES // (NOISE_BLOCK * d * 8))


class StepperKind(enum.Enum):
    EULER_MARUYAMA = "euler-maruyama"
    RK4_PLUS_NOISE = "rk4-plus-noise"


class OutcomeKind(enum.Enum):
    ONSET = "onset"
    EXTINCTION = "extinction"
    CENSORED = "censored"


@dataclass(frozen=True)
class HittingOutcome:
    """Result of one trajectory: what stopped it, when, and where."""

    kind: OutcomeKind
    time: float
    state: State | None
    stream: int | None = None
    path: np.ndarray | None = None


def _stream_generator(seed: int, stream: int) -> Generator:
    return Generator(Philox(key=np.array([seed, stream], dtype=np.uint64)))


def step(
    params: ModelParams,
    x: State,
    dt: float,
    noise: Sequence[float],
    kind: StepperKind = StepperKind.RK4_PLUS_NOISE,
) -> State:
    """Advance one step; ``noise`` holds the three increments already scaled by eps*sqrt(dt)."""
    if not (math.isfinite(dt) and dt > 0):
        raise ParameterError(f"dt must be finite and > 0, got {dt!r}")
    if not x.is_finite:
        raise ParameterError(f"step requires a finite state, got {x}")
    n0, n1, n2 = (float(noise[0]), float(noise[1]), float(noise[2]))
    p, r, s = params.p, params.r, params.s
    u, v, b = x.u, x.v, x.b
    if kind is StepperKind.EULER_MARUYAMA:
        k1u, k1v, k1b = drift_scalar(p, r, s, u, v, b)
        u = u + (k1u * dt + n0)
        v = v + (k1v * dt + n1)
        b = b + (k1b * dt + n2)
    else:
        half = 0.5 * dt
        sixth = dt / 6.0
        k1u, k1v, k1b = drift_scalar(p, r, s, u, v, b)
        k2u, k2v, k2b = drift_scalar(p, r, s, u + half * k1u, v + half * k1v, b + half * k1b)
        k3u, k3v, k3b = drift_scalar(p, r, s, u + half * k2u, v + half * k2v, b + half * k2b)
        k4u, k4v, k4b = drift_scalar(p, r, s, u + dt * k3u, v + dt * k3v, b + dt * k3b)
        u = u + (sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) + n0)
        v = v + (sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) + n1)
        b = b + (sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b) + n2)
    result = State(u, v, b)
    if not result.is_finite:
        raise BlowupError("step produced a non-finite state", t_last=0.0)
    return result


def run_to_hit(
    params: ModelParams,
    x0: State,
    ell: float = DEFAULT_ELL,
    dt: float = DEFAULT_DT,
    t_max: float = DEFAULT_T_MAX,
    noise_cfg: NoiseConfig = NoiseConfig(epsilon=0.0),
    kind: StepperKind = StepperKind.RK4_PLUS_NOISE,
    record_path: bool = False,
) -> HittingOutcome:
    """Integrate one trajectory until onset, extinction, or the horizon.

    Parameters
    ----------
    params, x0 : model parameters and initial state; callers normally start
        with ``0 < x0.v < ell`` (a start at or beyond a level resolves at
        time 0).
    ell : onset level for the v component.
    dt, t_max : step size and censoring horizon.
    noise_cfg : noise amplitude plus the (seed, stream) identity of this
        trajectory's random stream.
    kind : stepper; with ``epsilon == 0`` the default stepper reproduces the
        deterministic integrator bit for bit.
    record_path : attach the grid states visited (same layout as a
        deterministic trajectory) to the outcome.

    Raises
    ------
    BlowupError
        If the state becomes non-finite before either level is reached.
    """
    if not (math.isfinite(ell) and ell > 0):
        raise ParameterError(f"ell must be finite and > 0, got {ell!r}")
    if not (math.isfinite(dt) and dt > 0):
        raise ParameterError(f"dt must be finite and > 0, got {dt!r}")
    if not (math.isfinite(t_max) and t_max >= dt):
        raise ParameterError(f"t_max must be finite and >= dt, got {t_max!r}")
    if not x0.is_finite:
        raise ParameterError(f"initial state must be finite, got {x0}")

    stream = noise_cfg.stream_index
    start_row = np.array([x0.as_tuple()]) if record_path else None
    if x0.v >= ell:
        return HittingOutcome(OutcomeKind.ONSET, 0.0, x0, stream=stream, path=start_row)
    if x0.v <= 0.0:
        return HittingOutcome(OutcomeKind.EXTINCTION, 0.0, x0, stream=stream, path=start_row)

    eps = noise_cfg.epsilon
    gen = _stream_generator(noise_cfg.seed, stream) if eps > 0.0 else None
    n_steps = int(round(t_max / dt))
    p, r, s = params.p, params.r, params.s
    u, v, b = x0.u, x0.v, x0.b
    half = 0.5 * dt
    sixth = dt / 6.0
    es = eps * math.sqrt(dt)
    euler = kind is StepperKind.EULER_MARUYAMA
    path = np.empty((n_steps + 1, 3), dtype=float) if record_path else None
    if path is not None:
        path[0] = (u, v, b)

    k = 0
    while k < n_steps:
        n_block = min(NOISE_BLOCK, n_steps - k)
        rows = gen.standard_normal((n_block, 3)).tolist() if gen is not None else None
        for j in range(n_block):
            u_prev, v_prev, b_prev = u, v, b
            if euler:
                k1u, k1v, k1b = drift_scalar(p, r, s, u, v, b)
                du, dv, db = k1u * dt, k1v * dt, k1b * dt
            else:
                k1u, k1v, k1b = drift_scalar(p, r, s, u, v, b)
                k2u, k2v, k2b = drift_scalar(p, r, s, u + half * k1u, v + half * k1v, b + half * k1b)
                k3u, k3v, k3b = drift_scalar(p, r, s, u + half * k2u, v + half * k2v, b + half * k2b)
                k4u, k4v, k4b = drift_scalar(p, r, s, u + dt * k3u, v + dt * k3v, b + dt * k3b)
                du = sixth * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
                dv = sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
                db = sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            if rows is not None:
                n0, n1, n2 = rows[j]
                u = u + (du + es * n0)
                v = v + (dv + es * n1)
                b = b + (db + es * n2)
            else:
                u = u + du
                v = v + dv
                b = b + db
            if not math.isfinite(u + v + b):
                raise BlowupError(
                    f"non-finite state in stream {stream} at t={(k + j + 1) * dt}",
                    t_last=(k + j) * dt,
                    stream=stream,
                )
            if path is not None:
                path[k + j + 1] = (u, v, b)
            if v >= ell or v <= 0.0:
                level = ell if v >= ell else 0.0
                theta = (level - v_prev) / (v - v_prev)
                time = ((k + j) + theta) * dt
                state = State(
                    u_prev + theta * (u - u_prev),
                    v_prev + theta * (v - v_prev),
                    b_prev + theta * (b - b_prev),
                )
                outcome = OutcomeKind.ONSET if level == ell else OutcomeKind.EXTINCTION
                trimmed = path[: k + j + 2].copy() if path is not None else None
                return HittingOutcome(outcome, float(time), state, stream=stream, path=trimmed)
        k += n_block

    return HittingOutcome(
        OutcomeKind.CENSORED, float(t_max), State(u, v, b), stream=stream, path=path
    )


def run_batch(
    streams: Sequence[int],
    *,
    x0: np.ndarray,
    dt: float,
    t_max: float,
    epsilon: float,
    seed: int,
    params: ModelParams | None = None,
    drift_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    kind: StepperKind = StepperKind.RK4_PLUS_NOISE,
    upper: float | None = DEFAULT_ELL,
    lower: float | None = 0.0,
    hit_index: int = 1,
) -> list[HittingOutcome]:
    """Vectorized engine: many streams advance in lock-step as one array.

    ``drift_fn`` maps states of shape (n, d) to drifts of the same shape and
    defaults to the vortex drift of ``params`` (d = 3).  ``upper``/``lower``
    are the absorbing levels on component ``hit_index``; pass ``None`` to
    disable either (both disabled gives a fixed-horizon run whose outcomes
    are all ``CENSORED`` and carry the final states).

    The result list is ordered like ``streams``; each trajectory's noise
    comes from its own (seed, stream) generator, so splitting the streams
    over several calls returns bit-identical outcomes.
    """
    if drift_fn is None:
        if params is None:
            raise ParameterError("run_batch needs either params or drift_fn")
        p_, r_, s_ = params.p, params.r, params.s

        def drift_fn(x: np.ndarray) -> np.ndarray:
            return drift_array(p_, r_, s_, x)

    if not (math.isfinite(dt) and dt > 0):
        raise ParameterError(f"dt must be finite and > 0, got {dt!r}")
    if not (math.isfinite(t_max) and t_max >= dt):
        raise ParameterError(f"t_max must be finite and >= dt, got {t_max!r}")
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ParameterError(f"epsilon must be finite and >= 0, got {epsilon!r}")
    if upper is not None and lower is not None and not upper > lower:
        raise ParameterError(f"upper level must exceed lower level, got {upper!r} <= {lower!r}")

    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ParameterError(f"x0 must be a 1-D state vector, got shape {x0.shape}")
    if not np.isfinite(x0).all():
        raise ParameterError("initial state must be finite")
    d = x0.shape[0]
    stream_list = [int(s) for s in streams]
    n = len(stream_list)

    def _mk_state(row: np.ndarray) -> State | None:
        return State.from_array(row) if d == 3 else None

    v0 = x0[hit_index]
    if upper is not None and v0 >= upper:
        return [HittingOutcome(OutcomeKind.ONSET, 0.0, _mk_state(x0), stream=s) for s in stream_list]
    if lower is not None and v0 <= lower:
        return [HittingOutcome(OutcomeKind.EXTINCTION, 0.0, _mk_state(x0), stream=s) for s in stream_list]

    n_steps = int(round(t_max / dt))
    es = epsilon * math.sqrt(dt)
    euler = kind is StepperKind.EULER_MARUYAMA

    # Overflow in a diverging row is detected explicitly inside; silence the
    # elementwise warnings it would otherwise spray.
    outcomes: list[HittingOutcome] = []
    row_group = _row_group_size(d)
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n, row_group):
            group = stream_list[start : start + row_group]
            gens = [_stream_generator(seed, s) for s in group] if epsilon > 0.0 else None
            outcomes.extend(
                _advance_batch(
                    drift_fn, np.tile(x0, (len(group), 1)), gens, group,
                    n_steps, dt, es, euler, upper, lower, hit_index, t_max, _mk_state,
                )
            )
    return outcomes


def _advance_batch(
    drift_fn, x, gens, stream_list,
    n_steps, dt, es, euler, upper, lower, hit_index, t_max, mk_state,
):
    n = x.shape[0]
    d = x.shape[1]
    kinds = np.full(n, 2, dtype=np.int8)  # 2 = censored until proven otherwise
    times = np.full(n, float(t_max))
    finals = x.copy()
    active = np.arange(n)
    half = 0.5 * dt
    sixth = dt / 6.0
    step0 = 0
    while step0 < n_steps and active.size:
        n_block = min(NOISE_BLOCK, n_steps - step0)
        na = active.size
        if gens is not None:
            noise = np.empty((na, n_block, d))
            for j, row in enumerate(active):
                noise[j] = gens[row].standard_normal((n_block, d))
        else:
            noise = None
        alive = np.ones(na, dtype=bool)
        for j in range(n_block):
            if not active.size:
                break
            if euler:
                incr = drift_fn(x) * dt
            else:
                k1 = drift_fn(x)
                k2 = drift_fn(x + half * k1)
                k3 = drift_fn(x + half * k2)
                k4 = drift_fn(x + dt * k3)
                incr = sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if noise is not None:
                x_new = np.where(alive[:, None], x + (incr + es * noise[:, j, :]), x)
            else:
                x_new = np.where(alive[:, None], x + incr, x)
            bad = alive & ~np.isfinite(x_new).all(axis=1)
            if bad.any():
                first = int(stream_list[active[np.nonzero(bad)[0][0]]])
                raise BlowupError(
                    f"non-finite state in stream {first} at t={(step0 + j + 1) * dt}",
                    t_last=(step0 + j) * dt,
                    stream=first,
                )
            v_prev = x[:, hit_index]
            v_new = x_new[:, hit_index]
            if upper is not None:
                up = alive & (v_new >= upper)
                if up.any():
                    theta = (upper - v_prev[up]) / (v_new[up] - v_prev[up])
                    rows = active[up]
                    kinds[rows] = 0  # onset
                    times[rows] = ((step0 + j) + theta) * dt
                    finals[rows] = x[up] + theta[:, None] * (x_new[up] - x[up])
                    alive &= ~up
            if lower is not None:
                dn = alive & (v_new <= lower)
                if dn.any():
                    theta = (lower - v_prev[dn]) / (v_new[dn] - v_prev[dn])
                    rows = active[dn]
                    kinds[rows] = 1  # extinction
                    times[rows] = ((step0 + j) + theta) * dt
                    finals[rows] = x[dn] + theta[:, None] * (x_new[dn] - x[dn])
                    alive &= ~dn
            x = x_new
            # Periodically drop absorbed rows; their outcomes are recorded and
            # their remaining pre-drawn noise is simply discarded, so survivors
            # see exactly the same increments as without compaction.
            if (j + 1) % _COMPACT_EVERY == 0 and alive.mean() < 0.75:
                x = x[alive]
                active = active[alive]
                if noise is not None:
                    noise = noise[alive]
                alive = np.ones(x.shape[0], dtype=bool)
        if not alive.all():
            x = x[alive]
            active = active[alive]
        step0 += n_block

    finals[active] = x
    kind_map = (OutcomeKind.ONSET, OutcomeKind.EXTINCTION, OutcomeKind.CENSORED)
    return [
        HittingOutcome(kind_map[kinds[i]], float(times[i]), mk_state(finals[i]), stream=stream_list[i])
        for i in range(len(stream_list))
    ]
