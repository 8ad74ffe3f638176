"""Exact and asymptotic first-passage formulas for a scalar diffusion.

For ``dZ = F(Z) dt + eps dW`` on the corridor ``[0, ell]`` everything is
expressible through the integrating factor

    k_eps(y) = exp( -(2 / eps^2) * integral_0^y F ),

namely the probability of reaching ``ell`` before 0 from ``x``,

    p(x) = integral_0^x k_eps / integral_0^ell k_eps,

the conditional expected passage time given that the upper level wins
(a triple integral restructured through the cached antiderivative
``K(y) = integral_0^y p / k_eps`` into two one-dimensional passes), and its
small-start limit

    Psi(eps) = (2 / eps^2) * integral_0^ell k_eps(u) K(u) du.

All ratios are computed with the maximum of ``log k_eps`` factored out, so
only the bounded rescaled kernel is ever exponentiated.  The conditional
time formulas additionally need ``1 / k_eps``, whose dynamic range grows
like exp(2 max|integral F| / eps^2); when that leaves the double range the
operation raises :class:`~rionset.errors.QuadratureError` instead of
returning garbage.  Quadrature is adaptive Gauss-Kronrod (QUADPACK) under
the :class:`QuadConfig` tolerances, with a fixed-grid Simpson mode as an
independent slow cross-check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_simpson, quad, simpson, solve_ivp

from .errors import ParameterError, QuadratureError

__all__ = [
    "QuadConfig",
    "DriftFn1D",
    "ErfAsymptotics",
    "BUILTIN_DRIFTS",
    "make_drift",
    "k_eps",
    "log_k_eps",
    "hit_prob_1d",
    "asymptotic_hit_prob",
    "cond_exp_hit_time",
    "psi_limit",
    "erf_asymptotics",
]

# Largest exponent argument the conditional-time machinery will accept;
# beyond this 1/k_eps overflows IEEE doubles.
_MAX_LOG_RANGE = 700.0
_SIMPSON_NODES = 4097
_SCAN_NODES = 2049


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature tolerances for the adaptive integrator."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ParameterError("quadrature tolerances must be > 0")
        if self.max_subdivisions < 10:
            raise ParameterError("max_subdivisions must be >= 10")


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class DriftFn1D:
    """A scalar drift F with an optional analytic derivative at 0.

    The asymptotic operations require F(0) = 0 and F > 0 on (0, ell]; the
    exact quadrature formulas work for any locally integrable F.
    """

    fn: Callable[[float], float]
    derivative_at_zero: float | None = None
    label: str = "custom"

    def __call__(self, y: float) -> float:
        return float(self.fn(y))

    def slope_at_zero(self) -> float:
        """F'(0), analytic if supplied, otherwise a central-difference estimate."""
        if self.derivative_at_zero is not None:
            return float(self.derivative_at_zero)
        h = 1e-7
        warnings.warn(
            f"drift {self.label!r} has no analytic derivative at 0; "
            f"estimating by central difference with h={h}",
            stacklevel=2,
        )
        return (self(h) - self(-h)) / (2.0 * h)


@dataclass(frozen=True)
class ErfAsymptotics:
    """erf(c * eps^(alpha-1)) together with its small-eps regime."""

    value: float
    regime: str  # "tends_to_one", "constant_erf_c", or "power_law_decay"
    leading_order: float


def _make_zero(coefficient: float) -> DriftFn1D:
    return DriftFn1D(lambda y: 0.0, derivative_at_zero=0.0, label="zero")


def _make_linear(coefficient: float) -> DriftFn1D:
    a = float(coefficient)
    return DriftFn1D(lambda y: a * y, derivative_at_zero=a, label=f"linear(a={a:g})")


def _make_logistic(coefficient: float) -> DriftFn1D:
    a = float(coefficient)
    return DriftFn1D(lambda y: a * y * (1.0 - y), derivative_at_zero=a, label=f"logistic(a={a:g})")


BUILTIN_DRIFTS = {"zero": _make_zero, "linear": _make_linear, "logistic": _make_logistic}


def make_drift(name: str, coefficient: float = 1.0) -> DriftFn1D:
    """Build one of the named drifts: zero, linear (a*x), logistic (a*x*(1-x))."""
    try:
        factory = BUILTIN_DRIFTS[name]
    except KeyError:
        raise ParameterError(
            f"unknown drift {name!r}; built-ins are {sorted(BUILTIN_DRIFTS)}"
        ) from None
    if not (math.isfinite(coefficient)):
        raise ParameterError(f"coefficient must be finite, got {coefficient!r}")
    return factory(coefficient)


def _validate_eps_ell(epsilon: float, ell: float) -> None:
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ParameterError(f"epsilon must be finite and > 0, got {epsilon!r}")
    if not (math.isfinite(ell) and ell > 0):
        raise ParameterError(f"ell must be finite and > 0, got {ell!r}")


def _quad(fn, a: float, b: float, config: QuadConfig) -> float:
    """Adaptive quadrature that converts QUADPACK trouble into QuadratureError."""
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(
                fn, a, b,
                epsabs=config.abs_tol, epsrel=config.rel_tol, limit=config.max_subdivisions,
            )
        except IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    if not math.isfinite(value):
        raise QuadratureError(f"quadrature on [{a}, {b}] returned {value!r}")
    return value


class _Kernel:
    """Per-call cache: the drift antiderivative and the rescaled k_eps."""

    def __init__(self, drift: DriftFn1D, epsilon: float, ell: float, config: QuadConfig):
        self.drift = drift
        self.epsilon = epsilon
        self.ell = ell
        self.config = config
        sol = solve_ivp(
            lambda t, y: [drift(t)], (0.0, ell), [0.0],
            method="DOP853", dense_output=True, rtol=1e-12, atol=1e-15,
        )
        if not sol.success:
            raise QuadratureError(f"antiderivative of drift failed: {sol.message}")
        self._gsol = sol.sol
        scan = np.linspace(0.0, ell, _SCAN_NODES)
        log_k = (-2.0 / (epsilon * epsilon)) * self._gsol(scan)[0]
        if not np.isfinite(log_k).all():
            raise QuadratureError("log k_eps is not finite on [0, ell]")
        self.log_k_star = float(log_k.max())
        self.log_k_range = float(self.log_k_star - log_k.min())
        self._flow = None

    def log_k(self, y: float) -> float:
        return (-2.0 / (self.epsilon * self.epsilon)) * float(self._gsol(y)[0])

    def kt(self, y: float) -> float:
        """k_eps rescaled by its maximum over [0, ell]; bounded by 1 there."""
        return math.exp(self.log_k(y) - self.log_k_star)

    def flow(self):
        """Dense (I, J) with I' = kt and J' = I / kt, solved lazily.

        I is the rescaled antiderivative of k_eps; J / I(ell) is the cached
        K of the conditional-time formula (p = I / I(ell) folds in without
        needing I(ell) during the solve).
        """
        if self._flow is None:
            if self.log_k_range > _MAX_LOG_RANGE:
                raise QuadratureError(
                    f"1/k_eps spans e^{self.log_k_range:.1f} on [0, ell], beyond double "
                    f"precision; the conditional-time quadrature needs a larger epsilon"
                )
            rtol = max(2.5e-14, self.config.rel_tol * 1e-3)
            atol = max(1e-300, self.config.abs_tol * 1e-3)

            def rhs(t, y):
                k = self.kt(t)
                return (k, y[0] / k)

            sol = solve_ivp(
                rhs, (0.0, self.ell), [0.0, 0.0],
                method="DOP853", dense_output=True, rtol=rtol, atol=atol,
            )
            if not sol.success or not np.isfinite(sol.y[:, -1]).all():
                raise QuadratureError(f"antiderivative flow failed: {sol.message}")
            self._flow = sol.sol
        return self._flow


def log_k_eps(drift: DriftFn1D, epsilon: float, y: float, config: QuadConfig = DEFAULT_QUAD) -> float:
    """log k_eps(y) = -(2/eps^2) * integral_0^y F; the form safe for ratios."""
    _validate_eps_ell(epsilon, 1.0)
    if not (math.isfinite(y) and y >= 0):
        raise ParameterError(f"y must be finite and >= 0, got {y!r}")
    if y == 0.0:
        return 0.0
    inner = _quad(drift, 0.0, y, config)
    return (-2.0 / (epsilon * epsilon)) * inner


def k_eps(drift: DriftFn1D, epsilon: float, y: float, config: QuadConfig = DEFAULT_QUAD) -> float:
    """k_eps(y) itself; underflows to 0 (or overflows) outside the log form's range."""
    log_value = log_k_eps(drift, epsilon, y, config)
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def hit_prob_1d(
    drift: DriftFn1D,
    epsilon: float,
    ell: float,
    x: float,
    config: QuadConfig = DEFAULT_QUAD,
    method: str = "adaptive",
) -> float:
    """Probability of reaching ``ell`` before 0 from ``x`` in [0, ell].

    The ratio of the two k_eps integrals is computed with the kernel maximum
    factored out of both, and with the denominator assembled as
    numerator + tail so the result is exactly 0 at x = 0, exactly 1 at
    x = ell, and monotone in between.
    """
    _validate_eps_ell(epsilon, ell)
    if not (math.isfinite(x) and 0.0 <= x <= ell):
        raise ParameterError(f"x must lie in [0, ell], got {x!r}")
    if method == "adaptive":
        kernel = _Kernel(drift, epsilon, ell, config)
        num = _quad(kernel.kt, 0.0, x, config)
        tail = _quad(kernel.kt, x, ell, config)
    elif method == "simpson":
        num, tail = _simpson_hit_integrals(drift, epsilon, ell, x)
    else:
        raise ParameterError(f"method must be 'adaptive' or 'simpson', got {method!r}")
    denom = num + tail
    if denom <= 0.0 or not math.isfinite(denom):
        raise QuadratureError("k_eps integrals vanished or overflowed; level unreachable numerically")
    return num / denom


def asymptotic_hit_prob(drift: DriftFn1D, c: float, alpha: float) -> float:
    """Small-noise limit of the hit probability started from c * eps^alpha.

    1 for alpha in (0, 1), erf(c * sqrt(F'(0))) at alpha = 1, and 0 for
    alpha > 1.  The critical case needs F(0) = 0 and F'(0) > 0.
    """
    if not (math.isfinite(c) and c > 0):
        raise ParameterError(f"c must be finite and > 0, got {c!r}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterError(f"alpha must be finite and > 0, got {alpha!r}")
    if alpha < 1.0:
        return 1.0
    if alpha > 1.0:
        return 0.0
    f0 = drift(0.0)
    if abs(f0) > 1e-12:
        raise ParameterError(f"critical case requires F(0) = 0, got F(0) = {f0!r}")
    slope = drift.slope_at_zero()
    if not (math.isfinite(slope) and slope > 0):
        raise ParameterError(f"critical case requires F'(0) > 0, got {slope!r}")
    return math.erf(c * math.sqrt(slope))


def _cond_exp_pieces(kernel: _Kernel, x: float, config: QuadConfig) -> tuple[float, float, float, float, float]:
    flow = kernel.flow()
    i_ell = float(flow(kernel.ell)[0])
    if i_ell <= 0.0:
        raise QuadratureError("integral of k_eps over [0, ell] vanished")

    def kt_j(y: float) -> float:
        i_val, j_val = flow(y)
        return kernel.kt(y) * float(j_val)

    a_int = _quad(kt_j, x, kernel.ell, config) / i_ell
    dk_int = _quad(kt_j, 0.0, x, config) / i_ell
    c_int = _quad(kernel.kt, 0.0, x, config)
    b_int = _quad(kernel.kt, x, kernel.ell, config)
    return a_int, b_int, c_int, dk_int, i_ell


def cond_exp_hit_time(
    drift: DriftFn1D,
    epsilon: float,
    ell: float,
    x: float,
    config: QuadConfig = DEFAULT_QUAD,
    method: str = "adaptive",
) -> float:
    """Expected passage time to ``ell`` given it beats 0, started from x in (0, ell].

    Evaluates the restructured triple integral

        (2/eps^2) / I(x) * [ A(x) C(x) - B(x) D(x) ]

    with A, B the k_eps*K and k_eps integrals over [x, ell], D, C the same
    over [0, x], and K the cached antiderivative of p / k_eps.
    """
    _validate_eps_ell(epsilon, ell)
    if not (math.isfinite(x) and 0.0 < x <= ell):
        raise ParameterError(f"x must lie in (0, ell], got {x!r}")
    if method == "adaptive":
        kernel = _Kernel(drift, epsilon, ell, config)
        a_int, b_int, c_int, dk_int, _ = _cond_exp_pieces(kernel, x, config)
    elif method == "simpson":
        a_int, b_int, c_int, dk_int, _ = _simpson_cond_pieces(drift, epsilon, ell, x)
    else:
        raise ParameterError(f"method must be 'adaptive' or 'simpson', got {method!r}")
    if c_int <= 0.0:
        raise QuadratureError("integral of k_eps over [0, x] vanished")
    value = (2.0 / (epsilon * epsilon)) * (a_int * c_int - b_int * dk_int) / c_int
    if not math.isfinite(value):
        raise QuadratureError("conditional expected time overflowed")
    return value


def psi_limit(
    drift: DriftFn1D,
    epsilon: float,
    ell: float,
    config: QuadConfig = DEFAULT_QUAD,
    method: str = "adaptive",
) -> float:
    """Limit of the conditional expected passage time as the start tends to 0."""
    _validate_eps_ell(epsilon, ell)
    if method == "adaptive":
        kernel = _Kernel(drift, epsilon, ell, config)
        flow = kernel.flow()
        i_ell = float(flow(ell)[0])
        if i_ell <= 0.0:
            raise QuadratureError("integral of k_eps over [0, ell] vanished")

        def kt_j(y: float) -> float:
            return kernel.kt(y) * float(flow(y)[1])

        value = (2.0 / (epsilon * epsilon)) * _quad(kt_j, 0.0, ell, config) / i_ell
    elif method == "simpson":
        section = _simpson_sections(drift, epsilon, ell, None, with_flow=True)[0]
        i_ell = float(section.i_vals[-1])
        if i_ell <= 0.0:
            raise QuadratureError("integral of k_eps over [0, ell] vanished")
        value = (2.0 / (epsilon * epsilon)) * section.integral_kt_j() / i_ell
    else:
        raise ParameterError(f"method must be 'adaptive' or 'simpson', got {method!r}")
    if not math.isfinite(value):
        raise QuadratureError("limit value overflowed")
    return value


def erf_asymptotics(c: float, alpha: float, epsilon: float) -> ErfAsymptotics:
    """erf(c * eps^(alpha-1)) and which small-eps regime it sits in.

    The argument blows up for alpha < 1 (value tends to 1), is
    eps-independent at alpha = 1, and shrinks like eps^(alpha-1) for
    alpha > 1 where erf is asymptotically linear: (2 c / sqrt(pi)) *
    eps^(alpha-1).
    """
    if not (math.isfinite(c) and c > 0):
        raise ParameterError(f"c must be finite and > 0, got {c!r}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterError(f"alpha must be finite and > 0, got {alpha!r}")
    _validate_eps_ell(epsilon, 1.0)
    argument = c * epsilon ** (alpha - 1.0)
    value = math.erf(argument)
    if alpha < 1.0:
        return ErfAsymptotics(value=value, regime="tends_to_one", leading_order=1.0)
    if alpha == 1.0:
        return ErfAsymptotics(value=value, regime="constant_erf_c", leading_order=math.erf(c))
    leading = (2.0 * c / math.sqrt(math.pi)) * epsilon ** (alpha - 1.0)
    return ErfAsymptotics(value=value, regime="power_law_decay", leading_order=leading)


# --- fixed-grid Simpson cross-check mode ------------------------------------

class _SimpsonSection:
    """Uniform-grid node values of kt, I, J over one section."""

    def __init__(self, nodes: np.ndarray, kt: np.ndarray, i_vals: np.ndarray, j_vals: np.ndarray):
        self.nodes = nodes
        self.h = float(nodes[1] - nodes[0])
        self.kt = kt
        self.i_vals = i_vals
        self.j_vals = j_vals

    def integral_kt(self) -> float:
        return float(simpson(self.kt, dx=self.h))

    def integral_kt_j(self) -> float:
        return float(simpson(self.kt * self.j_vals, dx=self.h))


def _simpson_sections(
    drift: DriftFn1D, epsilon: float, ell: float, x: float | None, with_flow: bool
) -> list[_SimpsonSection]:
    """Build the fixed-grid machinery over [0, ell], split exactly at x.

    One shared log k_eps maximum rescales every section, and the cumulative
    I and J integrals carry across the section boundary.
    """
    breakpoints = [0.0, ell] if x is None or x <= 0.0 or x >= ell else [0.0, x, ell]
    node_sets = [
        np.linspace(a, b, _SIMPSON_NODES) for a, b in zip(breakpoints[:-1], breakpoints[1:])
    ]
    f_sets = [np.array([drift(t) for t in nodes]) for nodes in node_sets]
    g_sets = []
    carry_g = 0.0
    for nodes, f_vals in zip(node_sets, f_sets):
        g_vals = carry_g + cumulative_simpson(f_vals, dx=float(nodes[1] - nodes[0]), initial=0.0)
        g_sets.append(g_vals)
        carry_g = float(g_vals[-1])
    inv = -2.0 / (epsilon * epsilon)
    log_sets = [inv * g_vals for g_vals in g_sets]
    log_star = max(float(lv.max()) for lv in log_sets)
    log_min = min(float(lv.min()) for lv in log_sets)
    if with_flow and log_star - log_min > _MAX_LOG_RANGE:
        raise QuadratureError("1/k_eps exceeds double precision on the Simpson grid")
    sections = []
    carry_i = 0.0
    carry_j = 0.0
    for nodes, log_vals in zip(node_sets, log_sets):
        h = float(nodes[1] - nodes[0])
        kt_vals = np.exp(log_vals - log_star)
        i_vals = carry_i + cumulative_simpson(kt_vals, dx=h, initial=0.0)
        if with_flow:
            j_vals = carry_j + cumulative_simpson(i_vals / kt_vals, dx=h, initial=0.0)
        else:
            j_vals = np.zeros_like(i_vals)
        sections.append(_SimpsonSection(nodes, kt_vals, i_vals, j_vals))
        carry_i = float(i_vals[-1])
        carry_j = float(j_vals[-1])
    return sections


def _simpson_hit_integrals(drift: DriftFn1D, epsilon: float, ell: float, x: float) -> tuple[float, float]:
    sections = _simpson_sections(drift, epsilon, ell, x, with_flow=False)
    if len(sections) == 1:
        whole = sections[0].integral_kt()
        return (0.0, whole) if x <= 0.0 else (whole, 0.0)
    return sections[0].integral_kt(), sections[1].integral_kt()


def _simpson_cond_pieces(
    drift: DriftFn1D, epsilon: float, ell: float, x: float
) -> tuple[float, float, float, float, float]:
    sections = _simpson_sections(drift, epsilon, ell, x, with_flow=True)
    i_ell = float(sections[-1].i_vals[-1])
    if i_ell <= 0.0:
        raise QuadratureError("integral of k_eps over [0, ell] vanished")
    if len(sections) == 1:  # x == ell: the [x, ell] section is empty
        dk_int = sections[0].integral_kt_j() / i_ell
        return 0.0, 0.0, i_ell, dk_int, i_ell
    left, right = sections
    a_int = right.integral_kt_j() / i_ell
    dk_int = left.integral_kt_j() / i_ell
    c_int = float(left.i_vals[-1])
    b_int = i_ell - c_int
    return a_int, b_int, c_int, dk_int, i_ell
