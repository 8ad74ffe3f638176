"""FastAPI application exposing the experiment drivers."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import BlowupError, ParameterError, QuadratureError
from . import handlers
from .models import (
    DetTimeRequest,
    HealthResponse,
    HistRequest,
    HistResponse,
    IndicatorRequest,
    OneDimRequest,
    OneDimResponse,
    OnsetProbRequest,
    SimulateRequest,
    SimulateResponse,
    TableResponse,
    VarianceRequest,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="rionset",
        version=__version__,
        description="Hitting-time experiments for the stochastic hurricane-vortex model",
    )

    @app.exception_handler(ParameterError)
    async def _param_error(request: Request, exc: ParameterError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error_kind": "config", "message": str(exc)})

    @app.exception_handler(BlowupError)
    async def _blowup_error(request: Request, exc: BlowupError) -> JSONResponse:
        return JSONResponse(
            status_code=500,
            content={"error_kind": "blowup", "message": str(exc), "t_last": exc.t_last},
        )

    @app.exception_handler(QuadratureError)
    async def _quadrature_error(request: Request, exc: QuadratureError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"error_kind": "quadrature", "message": str(exc)})

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return handlers.handle_health()

    @app.post("/v1/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        return handlers.handle_simulate(req)

    @app.post("/v1/det-time", response_model=TableResponse)
    def det_time(req: DetTimeRequest) -> TableResponse:
        return handlers.handle_det_time(req)

    @app.post("/v1/onset-prob", response_model=TableResponse)
    def onset_prob(req: OnsetProbRequest) -> TableResponse:
        return handlers.handle_onset_prob(req)

    @app.post("/v1/indicator", response_model=TableResponse)
    def indicator(req: IndicatorRequest) -> TableResponse:
        return handlers.handle_indicator(req)

    @app.post("/v1/hist", response_model=HistResponse)
    def hist(req: HistRequest) -> HistResponse:
        return handlers.handle_hist(req)

    @app.post("/v1/variance", response_model=TableResponse)
    def variance(req: VarianceRequest) -> TableResponse:
        return handlers.handle_variance(req)

    @app.post("/v1/onedim", response_model=OneDimResponse)
    def onedim(req: OneDimRequest) -> OneDimResponse:
        return handlers.handle_onedim(req)

    return app


app = create_app()
