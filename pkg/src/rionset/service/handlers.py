"""Request handlers: the single compute surface behind both HTTP and CLI."""
from __future__ import annotations

import math

from .. import __version__
from ..asymptotics import onset_variance
from ..defaults import S_SWEEP, SWEEP_GRIDS, V0_SWEEP
from ..detode import deterministic_onset_time, integrate_ode, onset_time_curves, trajectory_table
from ..ensemble import (
    EnsembleConfig,
    conditional_variance_curve,
    onset_indicator,
    onset_probability_curve,
    run_ensemble,
)
from ..errors import NoOnsetError
from ..msd import ModelParams, NoiseConfig, State
from ..onedim import (
    QuadConfig,
    asymptotic_hit_prob,
    cond_exp_hit_time,
    erf_asymptotics,
    hit_prob_1d,
    make_drift,
    psi_limit,
)
from ..sde import OutcomeKind, StepperKind, run_to_hit
from .models import (
    DetTimeRequest,
    HealthResponse,
    HistPanel,
    HistRequest,
    HistResponse,
    IndicatorRequest,
    OneDimRequest,
    OneDimResponse,
    OnsetProbRequest,
    OutcomeModel,
    SimulateRequest,
    SimulateResponse,
    TableModel,
    TableResponse,
    VarianceRequest,
)

# Independent ensembles inside one experiment take disjoint stream blocks
# spaced by this stride (plenty of room below 2**64 stream indices).
STREAM_STRIDE = 2**32


def _params(req) -> ModelParams:
    return ModelParams(p=req.p, r=req.r, s=req.s)


def _x0(req) -> State:
    return State(u=req.u0, v=req.v0, b=req.b0)


def _stepper(req) -> StepperKind:
    return StepperKind(req.stepper)


def handle_health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    noise = NoiseConfig(epsilon=req.epsilon, seed=req.seed, stream_index=req.stream)
    outcome = run_to_hit(
        _params(req), _x0(req), req.ell, req.dt, req.t_max,
        noise_cfg=noise, kind=_stepper(req), record_path=req.record_path,
    )
    rows: list[list[float]] = []
    if outcome.path is not None:
        rows = [
            [k * req.dt, float(r[0]), float(r[1]), float(r[2])]
            for k, r in enumerate(outcome.path)
        ]
    return SimulateResponse(
        config=req.model_dump(),
        outcome=OutcomeModel(
            kind=outcome.kind.value,
            time=outcome.time,
            u=outcome.state.u,
            v=outcome.state.v,
            b=outcome.state.b,
            stream=req.stream,
        ),
        columns=["t", "u", "v", "b"],
        rows=rows,
    )


def handle_det_time(req: DetTimeRequest) -> TableResponse:
    table = onset_time_curves(
        req.sweep,
        req.values if req.values is not None else SWEEP_GRIDS[req.sweep],
        params=_params(req), x0=_x0(req), ell=req.ell, dt=req.dt, t_max=req.t_max,
    )
    return TableResponse(config=req.model_dump(), columns=list(table.columns), rows=[list(r) for r in table.rows])


def handle_onset_prob(req: OnsetProbRequest) -> TableResponse:
    values = req.values if req.values is not None else (V0_SWEEP if req.sweep == "v0" else S_SWEEP)
    columns: list[str] = []
    rows: list[list] = []
    for i, eps in enumerate(req.epsilons):
        cfg = EnsembleConfig(
            params=_params(req), x0=_x0(req), ell=req.ell, dt=req.dt, t_max=req.t_max,
            epsilon=float(eps), n_realizations=req.n_per_experiment, seed=req.seed,
            stepper=_stepper(req),
        )
        table = onset_probability_curve(
            cfg, req.sweep, values,
            n_experiments=req.n_experiments, n_per_experiment=req.n_per_experiment,
            stream_base=i * STREAM_STRIDE,
        )
        columns = list(table.columns)
        rows.extend([list(r) for r in table.rows])
    return TableResponse(config=req.model_dump(), columns=columns, rows=rows)


def handle_indicator(req: IndicatorRequest) -> TableResponse:
    rows = []
    for i, eps in enumerate(req.epsilons):
        cfg = EnsembleConfig(
            params=_params(req), x0=_x0(req), ell=req.ell, dt=req.dt, t_max=req.t_max,
            epsilon=float(eps), n_realizations=req.n, seed=req.seed, stepper=_stepper(req),
        )
        result = onset_indicator(
            cfg, target_prob=req.target_prob, tol=req.tol, stream_base=i * STREAM_STRIDE
        )
        rows.append(
            [
                float(eps),
                result.v0 if result.v0 is not None else math.nan,
                result.p_hat if result.p_hat is not None else math.nan,
                result.ci_low if result.ci_low is not None else math.nan,
                result.ci_high if result.ci_high is not None else math.nan,
                result.n_evaluations,
                result.status,
            ]
        )
    return TableResponse(
        config=req.model_dump(),
        columns=["epsilon", "v0_indicator", "p_hat", "ci_low", "ci_high", "n_evaluations", "status"],
        rows=rows,
    )


def handle_hist(req: HistRequest) -> HistResponse:
    params = _params(req)
    panels: list[HistPanel] = []
    det_cache: dict[float, tuple[float | None, float | None]] = {}
    panel_index = 0
    for v0 in req.v0_values:
        v0 = float(v0)
        if v0 not in det_cache:
            try:
                gauss = onset_variance(params, State(req.u0, v0, req.b0), req.ell, 1.0, req.dt, req.t_max)
                det_cache[v0] = (gauss.mean, gauss.h_factor)
            except NoOnsetError:
                det_cache[v0] = (None, None)
        for eps in req.epsilons:
            cfg = EnsembleConfig(
                params=params, x0=State(req.u0, v0, req.b0), ell=req.ell, dt=req.dt,
                t_max=req.t_max, epsilon=float(eps), n_realizations=req.n, seed=req.seed,
                stepper=_stepper(req), histogram_bins=req.bins,
            )
            stats = run_ensemble(cfg, stream_offset=panel_index * STREAM_STRIDE)
            panel_index += 1
            t_det, h_factor = det_cache[v0]
            panels.append(
                HistPanel(
                    v0=v0,
                    epsilon=float(eps),
                    n_realizations=stats.n_realizations,
                    n_onset=stats.n_onset,
                    n_extinct=stats.n_extinct,
                    n_censored=stats.n_censored,
                    p_hat=stats.p_hat,
                    ci_low=stats.ci_low,
                    ci_high=stats.ci_high,
                    tau_mean=stats.tau_mean,
                    tau_var=stats.tau_var,
                    det_onset_time=t_det,
                    gauss_mean=t_det,
                    gauss_variance=(eps * eps * h_factor) if h_factor is not None else None,
                    hist_edges=list(stats.hist_edges),
                    hist_counts=list(stats.hist_counts),
                )
            )
    return HistResponse(config=req.model_dump(), panels=panels)


def handle_variance(req: VarianceRequest) -> TableResponse:
    cfg = EnsembleConfig(
        params=_params(req), x0=_x0(req), ell=req.ell, dt=req.dt, t_max=req.t_max,
        epsilon=float(req.epsilons[0]) if req.epsilons else 0.0,
        n_realizations=req.n, seed=req.seed, stepper=_stepper(req),
    )
    table = conditional_variance_curve(cfg, req.v0_values, req.epsilons)
    return TableResponse(config=req.model_dump(), columns=list(table.columns), rows=[list(r) for r in table.rows])


def handle_onedim(req: OneDimRequest) -> OneDimResponse:
    drift = make_drift(req.drift, req.coefficient)
    config = QuadConfig(abs_tol=req.abs_tol, rel_tol=req.rel_tol)
    x_values = (
        req.x_values
        if req.x_values is not None
        else [round(req.ell * k / 10.0, 12) for k in range(1, 11)]
    )
    hit_rows = [
        [float(x), hit_prob_1d(drift, req.epsilon, req.ell, float(x), config, req.method)]
        for x in x_values
    ]
    time_rows = [
        [float(x), cond_exp_hit_time(drift, req.epsilon, req.ell, float(x), config, req.method)]
        for x in x_values
        if x > 0
    ]
    psi = psi_limit(drift, req.epsilon, req.ell, config, req.method)
    erf_rows = []
    for alpha in req.alphas:
        info = erf_asymptotics(req.c, float(alpha), req.epsilon)
        try:
            limit = asymptotic_hit_prob(drift, req.c, float(alpha))
        except Exception:
            limit = math.nan  # theorem hypotheses not met (e.g. zero drift at alpha = 1)
        erf_rows.append([float(alpha), info.value, info.regime, info.leading_order, limit])
    return OneDimResponse(
        config=req.model_dump(),
        psi=psi,
        hit_table=TableModel(columns=["x", "hit_prob"], rows=hit_rows),
        time_table=TableModel(columns=["x", "cond_exp_time"], rows=time_rows),
        erf_table=TableModel(
            columns=["alpha", "erf_value", "regime", "leading_order", "hit_prob_limit"],
            rows=erf_rows,
        ),
    )
