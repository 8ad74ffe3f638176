"""Experiment service: pydantic models, handlers, and the FastAPI app."""

from .app import app, create_app

__all__ = ["app", "create_app"]
