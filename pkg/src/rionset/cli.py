"""Command-line client for the experiment service.

Each subcommand builds a request model, executes it (in process by default,
or against a remote server with ``--server``), and writes the response as
CSV/JSON data files plus a sidecar manifest echoing the fully-resolved
configuration.  Re-running with ``--config <manifest>`` reproduces the same
files byte for byte; the worker-thread count (``RIONSET_WORKERS``) never
changes results.

Exit codes: 0 success, 2 configuration error, 3 numerical blowup,
4 quadrature failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

import httpx
from pydantic import BaseModel, ValidationError

from .errors import BlowupError, ParameterError, QuadratureError
from .service import handlers
from .service.models import (
    DetTimeRequest,
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
from .tables import Table, write_json, write_manifest

EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_QUADRATURE = 4

_ENDPOINTS: dict[str, tuple[str, type[BaseModel], type[BaseModel], Callable]] = {
    "simulate": ("/v1/simulate", SimulateRequest, SimulateResponse, handlers.handle_simulate),
    "det-time": ("/v1/det-time", DetTimeRequest, TableResponse, handlers.handle_det_time),
    "onset-prob": ("/v1/onset-prob", OnsetProbRequest, TableResponse, handlers.handle_onset_prob),
    "indicator": ("/v1/indicator", IndicatorRequest, TableResponse, handlers.handle_indicator),
    "hist": ("/v1/hist", HistRequest, HistResponse, handlers.handle_hist),
    "variance": ("/v1/variance", VarianceRequest, TableResponse, handlers.handle_variance),
    "onedim": ("/v1/onedim", OneDimRequest, OneDimResponse, handlers.handle_onedim),
}

_LIST_FIELDS = {"values", "epsilons", "v0_values", "x_values", "alphas"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc


def _add_model_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p", type=float, default=None)
    sub.add_argument("--r", type=float, default=None)
    sub.add_argument("--s", type=float, default=None)
    sub.add_argument("--u0", type=float, default=None)
    sub.add_argument("--v0", type=float, default=None)
    sub.add_argument("--b0", type=float, default=None)
    sub.add_argument("--ell", type=float, default=None)
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--tmax", dest="t_max", type=float, default=None)
    sub.add_argument("--stepper", choices=["rk4-plus-noise", "euler-maruyama"], default=None)


def _add_io_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", required=True, help="output file (or directory for hist)")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--config", default=None, help="key=value file or a manifest JSON to start from")
    sub.add_argument("--server", default=None, help="base URL of a running service; default is in-process")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rionset", description="Hitting-time experiments for the stochastic hurricane-vortex model"
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("det-time", help="deterministic onset time along parameter sweeps")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--sweep", choices=["v0", "s", "r", "p", "all"], default="all")
    sub.add_argument("--values", type=_float_list, default=None)

    sub = subs.add_parser("onset-prob", help="onset probability curves with replication error bars")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--sweep", choices=["v0", "s"], default="v0")
    sub.add_argument("--values", type=_float_list, default=None)
    sub.add_argument("--eps", dest="epsilons", type=_float_list, default=None)
    sub.add_argument("--experiments", dest="n_experiments", type=int, default=None)
    sub.add_argument("--per-experiment", dest="n_per_experiment", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)

    sub = subs.add_parser("indicator", help="smallest v0 reaching the target onset probability")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--eps", dest="epsilons", type=_float_list, default=None)
    sub.add_argument("--target", dest="target_prob", type=float, default=None)
    sub.add_argument("--tol", type=float, default=None)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)

    sub = subs.add_parser("hist", help="conditional onset-time histograms with Gaussian overlay")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--v0-grid", dest="v0_values", type=_float_list, default=None)
    sub.add_argument("--eps", dest="epsilons", type=_float_list, default=None)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--bins", type=int, default=None)

    sub = subs.add_parser("variance", help="Monte-Carlo vs small-noise conditional variance")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--v0-grid", dest="v0_values", type=_float_list, default=None)
    sub.add_argument("--eps", dest="epsilons", type=_float_list, default=None)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)

    sub = subs.add_parser("onedim", help="1-D diffusion oracle tables for a named drift")
    _add_io_args(sub)
    sub.add_argument("--drift", choices=["zero", "linear", "logistic"], default=None)
    sub.add_argument("--coef", dest="coefficient", type=float, default=None)
    sub.add_argument("--eps", dest="epsilon", type=float, default=None)
    sub.add_argument("--ell", type=float, default=None)
    sub.add_argument("--x-values", dest="x_values", type=_float_list, default=None)
    sub.add_argument("--alphas", type=_float_list, default=None)
    sub.add_argument("--c", type=float, default=None)
    sub.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    sub.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    sub.add_argument("--method", choices=["adaptive", "simpson"], default=None)

    sub = subs.add_parser("simulate", help="dump a single trajectory")
    _add_model_args(sub)
    _add_io_args(sub)
    sub.add_argument("--eps", dest="epsilon", type=float, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--stream", type=int, default=None)
    sub.add_argument("--no-path", dest="record_path", action="store_false", default=None)

    sub = subs.add_parser("serve", help="run the HTTP service")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8000)

    return parser


def _load_config_file(path: str) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        payload = json.loads(text)
        if isinstance(payload, dict) and isinstance(payload.get("config"), dict):
            return dict(payload["config"])
        if isinstance(payload, dict):
            return dict(payload)
        raise CliError(f"config file {path} is not a JSON object", EXIT_CONFIG)
    config: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}", EXIT_CONFIG)
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in _LIST_FIELDS:
            config[key] = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
        else:
            config[key] = raw
    return config


def _build_request(args: argparse.Namespace, model: type[BaseModel]) -> BaseModel:
    payload: dict[str, Any] = {}
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        payload.update({k: v for k, v in file_cfg.items() if k in model.model_fields})
    for name in model.model_fields:
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from exc


def _execute(command: str, request: BaseModel, server: str | None) -> BaseModel:
    path, _, response_model, handler = _ENDPOINTS[command]
    if server is None:
        return handler(request)
    response = httpx.post(server.rstrip("/") + path, json=request.model_dump(), timeout=None)
    if response.status_code != 200:
        try:
            body = response.json()
        except ValueError:
            body = {}
        kind = body.get("error_kind", "config" if response.status_code == 422 else "unknown")
        message = body.get("message", response.text)
        code = {"config": EXIT_CONFIG, "blowup": EXIT_BLOWUP, "quadrature": EXIT_QUADRATURE}.get(kind, 1)
        raise CliError(f"server error ({kind}): {message}", code)
    return response_model.model_validate(response.json())


def _write_table_outputs(command: str, response: TableResponse, out: str, fmt: str) -> None:
    table = Table(columns=response.columns, rows=response.rows)
    if fmt == "csv":
        table.write_csv(out)
    else:
        write_json(out, {"columns": response.columns, "rows": table.records()})
    write_manifest(out, command, response.config)
    print(f"wrote {out}")


def _grid_tag(value: float) -> str:
    return f"{value:g}".replace("-", "m")


def _write_hist_outputs(response: HistResponse, out: str, fmt: str) -> None:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"panels": [panel.model_dump() for panel in response.panels]}
    write_json(out_dir / "summary.json", summary)
    if fmt == "csv":
        for panel in response.panels:
            edges = panel.hist_edges
            rows = [
                (edges[i], edges[i + 1], panel.hist_counts[i])
                for i in range(len(panel.hist_counts))
            ]
            name = f"hist_v0_{_grid_tag(panel.v0)}_eps_{_grid_tag(panel.epsilon)}.csv"
            Table(columns=("bin_left", "bin_right", "count"), rows=rows).write_csv(out_dir / name)
    write_json(out_dir / "manifest.json", {"schema_version": 1, "subcommand": "hist", "config": response.config})
    print(f"wrote {out_dir}/ ({len(response.panels)} panels)")


def _write_onedim_outputs(response: OneDimResponse, out: str, fmt: str) -> None:
    if fmt == "json":
        write_json(out, response.model_dump())
    else:
        stem = Path(out)
        Table(columns=response.hit_table.columns, rows=response.hit_table.rows).write_csv(out)
        Table(columns=response.time_table.columns, rows=response.time_table.rows).write_csv(
            stem.with_suffix(".time.csv")
        )
        Table(columns=response.erf_table.columns, rows=response.erf_table.rows).write_csv(
            stem.with_suffix(".erf.csv")
        )
        write_json(stem.with_suffix(".summary.json"), {"psi": response.psi})
    write_manifest(out, "onedim", response.config)
    print(f"wrote {out}")


def _write_simulate_outputs(response: SimulateResponse, out: str, fmt: str) -> None:
    if fmt == "json":
        write_json(out, response.model_dump())
    else:
        Table(columns=response.columns, rows=response.rows).write_csv(out)
        write_json(Path(out).with_suffix(".outcome.json"), response.outcome.model_dump())
    write_manifest(out, "simulate", response.config)
    outcome = response.outcome
    print(f"{outcome.kind} at t={outcome.time:.6g}; wrote {out}")


def _run_command(args: argparse.Namespace) -> None:
    command = args.command
    if command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return

    if command == "det-time" and args.sweep == "all":
        out = Path(args.out)
        for sweep in ("v0", "s", "r", "p"):
            args.sweep = sweep
            request = _build_request(args, DetTimeRequest)
            response = _execute(command, request, args.server)
            sweep_out = out.with_suffix(f".{sweep}{out.suffix or '.csv'}")
            _write_table_outputs(command, response, str(sweep_out), args.format)
        args.sweep = "all"
        return

    _, model, _, _ = _ENDPOINTS[command]
    request = _build_request(args, model)
    response = _execute(command, request, args.server)
    if command == "hist":
        _write_hist_outputs(response, args.out, args.format)
    elif command == "onedim":
        _write_onedim_outputs(response, args.out, args.format)
    elif command == "simulate":
        _write_simulate_outputs(response, args.out, args.format)
    else:
        _write_table_outputs(command, response, args.out, args.format)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _run_command(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowupError as exc:
        print(f"numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except QuadratureError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
