"""Exception hierarchy shared across the package."""
from __future__ import annotations


class RIOnsetError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RIOnsetError, ValueError):
    """Invalid model parameter, state, or run configuration."""


class BlowupError(RIOnsetError, ArithmeticError):
    """Integration produced a non-finite state.

    ``t_last`` holds the last time at which the state was still finite;
    ``stream`` identifies the offending noise stream when the blowup
    happened inside an ensemble member (``None`` otherwise).
    """

    def __init__(self, message: str, t_last: float, stream: int | None = None):
        super().__init__(message)
        self.t_last = t_last
        self.stream = stream


class QuadratureError(RIOnsetError, RuntimeError):
    """Quadrature did not converge to tolerance or left the double range."""


class NoOnsetError(RIOnsetError, RuntimeError):
    """The deterministic trajectory never reaches the onset level."""


class DegenerateDistributionError(RIOnsetError, RuntimeError):
    """The Gaussian onset-time approximation collapsed to a point mass."""
