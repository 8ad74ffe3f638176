"""Monte-Carlo estimation of onset probability and onset-time statistics.

An ensemble is ``n_realizations`` independent trajectories distinguished
only by their noise-stream index.  Trajectories are fanned out over a
thread pool in fixed-size chunks and aggregated in stream order, so the
statistics are a pure function of the configuration and master seed,
independent of the worker count (set via the ``RIONSET_WORKERS``
environment variable or the ``workers`` argument).

Censored trajectories count against the onset probability but are reported
separately so an undersized horizon is visible.  Confidence intervals use
the Wilson score construction, which stays honest near probabilities 0 and
1 where these experiments operate.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .defaults import (
    DEFAULT_DT,
    DEFAULT_ELL,
    DEFAULT_N_REALIZATIONS,
    DEFAULT_PARAMS,
    DEFAULT_SEED,
    DEFAULT_T_MAX,
    DEFAULT_X0,
    WORKERS_ENV_VAR,
)
from .detode import apply_sweep
from .errors import ParameterError
from .msd import ModelParams, State
from .sde import HittingOutcome, OutcomeKind, StepperKind, run_batch
from .tables import Table

__all__ = [
    "EnsembleConfig",
    "EnsembleStats",
    "IndicatorResult",
    "wilson_interval",
    "aggregate_outcomes",
    "run_ensemble",
    "onset_probability_curve",
    "onset_indicator",
    "conditional_variance_curve",
]

# Trajectories are processed in chunks of this many streams; the chunking is
# independent of the worker count so results cannot depend on it.
CHUNK = 256


@dataclass(frozen=True)
class EnsembleConfig:
    """Configuration of one Monte-Carlo ensemble."""

    params: ModelParams = DEFAULT_PARAMS
    x0: State = DEFAULT_X0
    ell: float = DEFAULT_ELL
    dt: float = DEFAULT_DT
    t_max: float = DEFAULT_T_MAX
    epsilon: float = 0.0
    n_realizations: int = DEFAULT_N_REALIZATIONS
    seed: int = DEFAULT_SEED
    stepper: StepperKind = StepperKind.RK4_PLUS_NOISE
    histogram_bins: int | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.n_realizations, int) and self.n_realizations >= 1):
            raise ParameterError(f"n_realizations must be >= 1, got {self.n_realizations!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ParameterError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if self.histogram_bins is not None and self.histogram_bins < 1:
            raise ParameterError(f"histogram_bins must be >= 1, got {self.histogram_bins!r}")


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregated ensemble result; conditional moments are None when undefined."""

    n_realizations: int
    n_onset: int
    n_extinct: int
    n_censored: int
    p_hat: float
    ci_low: float
    ci_high: float
    tau_mean: float | None
    tau_var: float | None
    hist_edges: tuple[float, ...]
    hist_counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "n_realizations": self.n_realizations,
            "n_onset": self.n_onset,
            "n_extinct": self.n_extinct,
            "n_censored": self.n_censored,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "tau_mean": self.tau_mean,
            "tau_var": self.tau_var,
            "hist_edges": list(self.hist_edges),
            "hist_counts": list(self.hist_counts),
        }


@dataclass(frozen=True)
class IndicatorResult:
    """Smallest v0 whose onset probability reaches the target, with its CI."""

    v0: float | None
    p_hat: float | None
    ci_low: float | None
    ci_high: float | None
    n_evaluations: int
    status: str  # "ci_match", "bracket_converged", or "no_solution"


def wilson_interval(n_success: int, n_total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n_total < 1:
        raise ParameterError("wilson_interval needs at least one trial")
    if not 0 < confidence < 1:
        raise ParameterError(f"confidence must be in (0, 1), got {confidence!r}")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    phat = n_success / n_total
    denom = 1.0 + z * z / n_total
    center = (phat + z * z / (2.0 * n_total)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n_total + z * z / (4.0 * n_total * n_total)) / denom
    # Clamp to [0, 1] and force the bracket to contain the point estimate
    # (roundoff can push a boundary past phat at counts 0 and n).
    return (min(max(0.0, center - half), phat), max(min(1.0, center + half), phat))


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if workers < 1:
        raise ParameterError(f"worker count must be >= 1, got {workers!r}")
    return workers


def aggregate_outcomes(
    outcomes: Sequence[HittingOutcome],
    histogram_bins: int | None = None,
    confidence: float = 0.95,
) -> EnsembleStats:
    """Reduce trajectory outcomes to ensemble statistics.

    Aggregation is order-independent: outcomes are sorted by stream index
    first, so any permutation of the input yields identical statistics.
    """
    if not outcomes:
        raise ParameterError("cannot aggregate an empty outcome list")
    if all(o.stream is not None for o in outcomes):
        outcomes = sorted(outcomes, key=lambda o: o.stream)
    n = len(outcomes)
    kinds = [o.kind for o in outcomes]
    n_onset = sum(k is OutcomeKind.ONSET for k in kinds)
    n_extinct = sum(k is OutcomeKind.EXTINCTION for k in kinds)
    n_censored = n - n_onset - n_extinct
    p_hat = n_onset / n
    ci_low, ci_high = wilson_interval(n_onset, n, confidence)

    onset_times = np.array([o.time for o in outcomes if o.kind is OutcomeKind.ONSET])
    if n_onset == 0:
        tau_mean = None
        tau_var = None
        edges: tuple[float, ...] = ()
        counts: tuple[int, ...] = ()
    else:
        tau_mean = float(np.mean(onset_times))
        tau_var = float(np.var(onset_times, ddof=1)) if n_onset > 1 else None
        hist_counts, hist_edges = np.histogram(
            onset_times, bins=histogram_bins if histogram_bins is not None else "fd"
        )
        edges = tuple(float(e) for e in hist_edges)
        counts = tuple(int(c) for c in hist_counts)
    return EnsembleStats(
        n_realizations=n,
        n_onset=n_onset,
        n_extinct=n_extinct,
        n_censored=n_censored,
        p_hat=p_hat,
        ci_low=ci_low,
        ci_high=ci_high,
        tau_mean=tau_mean,
        tau_var=tau_var,
        hist_edges=edges,
        hist_counts=counts,
    )


def _collect_outcomes(
    cfg: EnsembleConfig, stream_offset: int = 0, workers: int | None = None
) -> list[HittingOutcome]:
    """Run all trajectories of an ensemble, returning outcomes in stream order."""
    workers = resolve_workers(workers)
    streams = range(stream_offset, stream_offset + cfg.n_realizations)
    chunks = [
        range(start, min(start + CHUNK, streams.stop))
        for start in range(streams.start, streams.stop, CHUNK)
    ]

    def run_chunk(chunk: range) -> list[HittingOutcome]:
        return run_batch(
            chunk,
            x0=cfg.x0.as_array(),
            dt=cfg.dt,
            t_max=cfg.t_max,
            epsilon=cfg.epsilon,
            seed=cfg.seed,
            params=cfg.params,
            kind=cfg.stepper,
            upper=cfg.ell,
            lower=0.0,
        )

    if workers == 1 or len(chunks) == 1:
        parts = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
    return [outcome for part in parts for outcome in part]


def run_ensemble(cfg: EnsembleConfig, *, stream_offset: int = 0, workers: int | None = None) -> EnsembleStats:
    """Run one Monte-Carlo ensemble and aggregate it.

    The result is a pure function of ``cfg`` and ``stream_offset``; worker
    count only affects wall time.
    """
    outcomes = _collect_outcomes(cfg, stream_offset=stream_offset, workers=workers)
    return aggregate_outcomes(outcomes, histogram_bins=cfg.histogram_bins)


def onset_probability_curve(
    cfg: EnsembleConfig,
    sweep: str,
    values: Sequence[float],
    n_experiments: int = 10,
    n_per_experiment: int = 100,
    stream_base: int = 0,
    workers: int | None = None,
) -> Table:
    """Onset probability along a parameter sweep, with replication error bars.

    Each sweep point runs ``n_experiments`` independent ensembles of
    ``n_per_experiment`` realizations; the confidence interval comes from
    the spread of the per-experiment onset fractions (normal approximation
    over experiments), while counts and conditional moments are pooled.
    Every (point, experiment) pair draws from its own stream block, so no
    noise is shared anywhere along the curve.
    """
    if n_experiments < 1 or n_per_experiment < 1:
        raise ParameterError("n_experiments and n_per_experiment must be >= 1")
    z = float(norm.ppf(0.975))
    rows = []
    for k, value in enumerate(values):
        params_i, x0_i = apply_sweep(sweep, value, cfg.params, cfg.x0)
        cfg_i = replace(cfg, params=params_i, x0=x0_i, n_realizations=n_per_experiment)
        all_outcomes: list[HittingOutcome] = []
        fractions = []
        for j in range(n_experiments):
            offset = stream_base + (k * n_experiments + j) * n_per_experiment
            outcomes = _collect_outcomes(cfg_i, stream_offset=offset, workers=workers)
            fractions.append(
                sum(o.kind is OutcomeKind.ONSET for o in outcomes) / n_per_experiment
            )
            all_outcomes.extend(outcomes)
        pooled = aggregate_outcomes(all_outcomes, histogram_bins=cfg.histogram_bins)
        if n_experiments > 1:
            spread = float(np.std(fractions, ddof=1)) / math.sqrt(n_experiments)
            ci_low = max(0.0, pooled.p_hat - z * spread)
            ci_high = min(1.0, pooled.p_hat + z * spread)
        else:
            ci_low, ci_high = pooled.ci_low, pooled.ci_high
        rows.append(
            (
                float(value),
                cfg.epsilon,
                pooled.p_hat,
                ci_low,
                ci_high,
                pooled.n_onset,
                pooled.tau_mean if pooled.tau_mean is not None else math.nan,
                pooled.tau_var if pooled.tau_var is not None else math.nan,
            )
        )
    return Table(
        columns=("sweep_value", "epsilon", "p_hat", "ci_low", "ci_high", "n_onset", "tau_mean", "tau_var"),
        rows=rows,
    )


def onset_indicator(
    cfg: EnsembleConfig,
    target_prob: float = 0.8,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-4,
    stream_base: int = 0,
    workers: int | None = None,
) -> IndicatorResult:
    """Bisect for the smallest v0 whose onset probability reaches the target.

    The search brackets v0 in ``(0, ell)`` by default, where the endpoint
    probabilities are 0 and 1 by construction.  Each midpoint evaluation is
    a fresh ensemble on its own stream block, so the search is
    deterministic.  It stops when the bracket is narrower than ``tol`` or
    when the midpoint's confidence interval already contains the target; an
    unreachable target inside a user-supplied bracket yields an explicit
    no-solution result.
    """
    if not 0.0 < target_prob < 1.0:
        raise ParameterError(f"target_prob must be in (0, 1), got {target_prob!r}")
    lo, hi = bracket if bracket is not None else (0.0, cfg.ell)
    if not (0.0 <= lo < hi <= cfg.ell):
        raise ParameterError(f"bracket must satisfy 0 <= lo < hi <= ell, got {(lo, hi)!r}")
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol!r}")

    n_evaluations = 0

    def evaluate(v0: float) -> EnsembleStats:
        nonlocal n_evaluations
        cfg_i = replace(cfg, x0=State(cfg.x0.u, float(v0), cfg.x0.b))
        offset = stream_base + n_evaluations * cfg.n_realizations
        stats = run_ensemble(cfg_i, stream_offset=offset, workers=workers)
        n_evaluations += 1
        return stats

    # Default bracket endpoints are known analytically (p(0+)=0, p(ell)=1);
    # only user-supplied interior endpoints need checking.
    if lo > 0.0 and evaluate(lo).p_hat >= target_prob:
        return IndicatorResult(None, None, None, None, n_evaluations, "no_solution")
    if hi < cfg.ell and evaluate(hi).p_hat < target_prob:
        return IndicatorResult(None, None, None, None, n_evaluations, "no_solution")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        stats = evaluate(mid)
        if stats.ci_low <= target_prob <= stats.ci_high:
            return IndicatorResult(
                mid, stats.p_hat, stats.ci_low, stats.ci_high, n_evaluations, "ci_match"
            )
        if stats.p_hat < target_prob:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    stats = evaluate(mid)
    return IndicatorResult(
        mid, stats.p_hat, stats.ci_low, stats.ci_high, n_evaluations, "bracket_converged"
    )


def conditional_variance_curve(
    cfg: EnsembleConfig,
    v0_values: Sequence[float],
    epsilons: Sequence[float],
    workers: int | None = None,
) -> Table:
    """Monte-Carlo conditional variance of the onset time next to the small-noise prediction."""
    from .asymptotics import onset_variance  # local import: asymptotics never imports back

    rows = []
    theory: dict[float, tuple[float, float]] = {}
    for v0 in v0_values:
        gauss = onset_variance(
            cfg.params, State(cfg.x0.u, float(v0), cfg.x0.b), cfg.ell, epsilon=1.0,
            dt=cfg.dt, t_max=cfg.t_max,
        )
        theory[float(v0)] = (gauss.mean, gauss.variance)  # variance at eps=1 is the eps-free factor
    cell = 0
    for eps in epsilons:
        for v0 in v0_values:
            cfg_i = replace(cfg, x0=State(cfg.x0.u, float(v0), cfg.x0.b), epsilon=float(eps))
            stats = run_ensemble(cfg_i, stream_offset=cell * cfg.n_realizations, workers=workers)
            cell += 1
            t_det, h_factor = theory[float(v0)]
            rows.append(
                (
                    float(v0),
                    float(eps),
                    t_det,
                    stats.p_hat,
                    stats.n_onset,
                    stats.tau_mean if stats.tau_mean is not None else math.nan,
                    stats.tau_var if stats.tau_var is not None else math.nan,
                    eps * eps * h_factor,
                )
            )
    return Table(
        columns=(
            "v0", "epsilon", "onset_time", "p_hat", "n_onset",
            "tau_mean", "tau_var_mc", "tau_var_theory",
        ),
        rows=rows,
    )
