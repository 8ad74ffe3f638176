"""First-hitting-time analysis of rapid-intensification onset in a stochastic
hurricane-vortex model: Monte-Carlo onset probability and timing, small-noise
Gaussian asymptotics, and exact 1-D diffusion oracles."""

from .asymptotics import OnsetGaussian, gaussian_onset_pdf, h_of_T_curves, integrate_sigma, onset_variance
from .defaults import (
    DEFAULT_DT,
    DEFAULT_ELL,
    DEFAULT_N_REALIZATIONS,
    DEFAULT_PARAMS,
    DEFAULT_T_MAX,
    DEFAULT_X0,
)
from .detode import DetOnset, Trajectory, deterministic_onset_time, integrate_ode, onset_time_curves
from .ensemble import (
    EnsembleConfig,
    EnsembleStats,
    IndicatorResult,
    aggregate_outcomes,
    conditional_variance_curve,
    onset_indicator,
    onset_probability_curve,
    run_ensemble,
    wilson_interval,
)
from .errors import (
    BlowupError,
    DegenerateDistributionError,
    NoOnsetError,
    ParameterError,
    QuadratureError,
    RIOnsetError,
)
from .msd import ModelParams, NoiseConfig, State, drift, jacobian
from .onedim import (
    DriftFn1D,
    QuadConfig,
    asymptotic_hit_prob,
    cond_exp_hit_time,
    erf_asymptotics,
    hit_prob_1d,
    k_eps,
    log_k_eps,
    make_drift,
    psi_limit,
)
from .sde import HittingOutcome, OutcomeKind, StepperKind, run_batch, run_to_hit, step

__version__ = "0.1.0"
