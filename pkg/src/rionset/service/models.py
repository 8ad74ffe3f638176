"""Pydantic request/response models for the experiment service."""
from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Number = float | int
Cell = float | int | str | None


class VortexParams(BaseModel):
    """Model parameters and run geometry shared by the vortex experiments."""

    model_config = ConfigDict(extra="forbid")

    p: float = Field(default=200.0, gt=0)
    r: float = Field(default=0.25, gt=0)
    s: float = Field(default=0.1, gt=0)
    u0: float = -0.01
    v0: float = 0.01
    b0: float = 1e-4
    ell: float = Field(default=0.1, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    t_max: float = Field(default=50.0, gt=0)
    stepper: Literal["rk4-plus-noise", "euler-maruyama"] = "rk4-plus-noise"


class SimulateRequest(VortexParams):
    epsilon: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0)
    stream: int = Field(default=0, ge=0)
    record_path: bool = True


class DetTimeRequest(VortexParams):
    sweep: Literal["v0", "s", "r", "p"] = "v0"
    values: Optional[list[float]] = None


class OnsetProbRequest(VortexParams):
    sweep: Literal["v0", "s"] = "v0"
    values: Optional[list[float]] = None
    epsilons: list[float] = Field(default=[1e-3, 1e-2, 1e-1])
    n_experiments: int = Field(default=10, ge=1)
    n_per_experiment: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)


class IndicatorRequest(VortexParams):
    epsilons: list[float] = Field(default=[0.002, 0.004, 0.006, 0.008, 0.01])
    target_prob: float = Field(default=0.8, gt=0, lt=1)
    tol: float = Field(default=1e-4, gt=0)
    n: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)


class HistRequest(VortexParams):
    v0_values: list[float] = Field(default=[0.005, 0.01, 0.02, 0.04])
    epsilons: list[float] = Field(default=[0.1, 0.01, 0.001])
    n: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    bins: Optional[int] = Field(default=None, ge=1)


class VarianceRequest(VortexParams):
    v0_values: list[float] = Field(default=[0.01, 0.02, 0.03, 0.04, 0.05])
    epsilons: list[float] = Field(default=[1e-4, 1e-3, 1e-2])
    n: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)


class OneDimRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    drift: Literal["zero", "linear", "logistic"] = "linear"
    coefficient: float = 1.0
    epsilon: float = Field(default=0.05, gt=0)
    ell: float = Field(default=0.1, gt=0)
    x_values: Optional[list[float]] = None
    alphas: list[float] = Field(default=[0.5, 1.0, 2.0])
    c: float = Field(default=1.0, gt=0)
    abs_tol: float = Field(default=1e-10, gt=0)
    rel_tol: float = Field(default=1e-8, gt=0)
    method: Literal["adaptive", "simpson"] = "adaptive"


class TableModel(BaseModel):
    columns: list[str]
    rows: list[list[Cell]]


class TableResponse(BaseModel):
    config: dict[str, Any]
    columns: list[str]
    rows: list[list[Cell]]


class OutcomeModel(BaseModel):
    kind: Literal["onset", "extinction", "censored"]
    time: float
    u: float
    v: float
    b: float
    stream: int


class SimulateResponse(BaseModel):
    config: dict[str, Any]
    outcome: OutcomeModel
    columns: list[str]
    rows: list[list[float]]


class HistPanel(BaseModel):
    v0: float
    epsilon: float
    n_realizations: int
    n_onset: int
    n_extinct: int
    n_censored: int
    p_hat: float
    ci_low: float
    ci_high: float
    tau_mean: Optional[float]
    tau_var: Optional[float]
    det_onset_time: Optional[float]
    gauss_mean: Optional[float]
    gauss_variance: Optional[float]
    hist_edges: list[float]
    hist_counts: list[int]


class HistResponse(BaseModel):
    config: dict[str, Any]
    panels: list[HistPanel]


class OneDimResponse(BaseModel):
    config: dict[str, Any]
    psi: float
    hit_table: TableModel
    time_table: TableModel
    erf_table: TableModel


class HealthResponse(BaseModel):
    status: str
    version: str
