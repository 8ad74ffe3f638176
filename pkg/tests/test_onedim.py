from __future__ import annotations

import math

import numpy as np
import pytest

from rionset import (
    DriftFn1D,
    OutcomeKind,
    ParameterError,
    QuadConfig,
    QuadratureError,
    asymptotic_hit_prob,
    cond_exp_hit_time,
    erf_asymptotics,
    hit_prob_1d,
    k_eps,
    log_k_eps,
    make_drift,
    psi_limit,
    run_batch,
    wilson_interval,
)

ZERO = make_drift("zero")
LINEAR = make_drift("linear")
LOGISTIC = make_drift("logistic")
TIGHT = QuadConfig(abs_tol=1e-14, rel_tol=1e-12)


class TestKernel:
    def test_zero_drift_kernel_is_one(self):
        for y in (0.0, 0.03, 0.1, 0.7):
            assert k_eps(ZERO, 0.1, y) == 1.0

    def test_linear_drift_closed_form(self):
        # F = x integrates to y^2/2, so k = exp(-y^2/eps^2); at y = eps: 1/e.
        eps = 0.05
        assert k_eps(LINEAR, eps, eps) == pytest.approx(math.exp(-1.0), rel=1e-10)
        assert log_k_eps(LINEAR, eps, 0.2) == pytest.approx(-0.04 / (eps * eps), rel=1e-10)

    def test_empty_integral_at_zero(self):
        assert k_eps(LOGISTIC, 0.01, 0.0) == 1.0
        assert log_k_eps(LOGISTIC, 0.01, 0.0) == 0.0

    def test_negative_point_rejected(self):
        with pytest.raises(ParameterError):
            k_eps(ZERO, 0.1, -0.1)


class TestHitProb:
    def test_driftless_case_is_linear_in_x(self):
        assert hit_prob_1d(ZERO, 0.1, 0.1, 0.05) == 0.5
        for x in (0.01, 0.02, 0.07):
            assert hit_prob_1d(ZERO, 0.3, 0.1, x) == pytest.approx(x / 0.1, rel=1e-12)

    def test_boundary_values_are_exact(self):
        for drift in (ZERO, LINEAR, LOGISTIC):
            assert hit_prob_1d(drift, 0.05, 0.1, 0.0) == 0.0
            assert hit_prob_1d(drift, 0.05, 0.1, 0.1) == 1.0

    def test_monotone_in_start_point(self):
        xs = np.linspace(0.0, 0.1, 21)
        for drift in (LINEAR, LOGISTIC):
            probs = [hit_prob_1d(drift, 0.04, 0.1, float(x)) for x in xs]
            assert all(a <= b + 1e-14 for a, b in zip(probs, probs[1:]))

    def test_small_noise_limit_is_erf(self):
        errors = []
        for eps in (1e-1, 1e-2, 1e-3):
            p = hit_prob_1d(LINEAR, eps, 0.1, eps, TIGHT)
            errors.append(abs(p - math.erf(1.0)))
        assert errors[0] >= errors[1] - 1e-15
        assert errors[1] >= errors[2] - 1e-15
        assert errors[-1] < 1e-3

    def test_simpson_mode_agrees_with_adaptive(self):
        for drift, eps, x in ((LINEAR, 0.05, 0.02), (LOGISTIC, 0.03, 0.06), (ZERO, 0.1, 0.05)):
            a = hit_prob_1d(drift, eps, 0.1, x)
            b = hit_prob_1d(drift, eps, 0.1, x, method="simpson")
            assert b == pytest.approx(a, rel=1e-8, abs=1e-12)

    def test_out_of_range_start_rejected(self):
        with pytest.raises(ParameterError):
            hit_prob_1d(ZERO, 0.1, 0.1, 0.2)


class TestAsymptoticHitProb:
    def test_three_regimes(self):
        assert asymptotic_hit_prob(LINEAR, c=1.0, alpha=0.5) == 1.0
        assert asymptotic_hit_prob(LINEAR, c=1.0, alpha=2.0) == 0.0
        assert asymptotic_hit_prob(LINEAR, c=1.0, alpha=1.0) == pytest.approx(
            math.erf(1.0), rel=1e-14
        )

    def test_critical_case_uses_the_slope(self):
        fast = make_drift("linear", coefficient=4.0)
        assert asymptotic_hit_prob(fast, c=0.5, alpha=1.0) == pytest.approx(
            math.erf(1.0), rel=1e-14
        )

    def test_slope_estimated_when_not_supplied(self):
        drift = DriftFn1D(lambda y: math.sin(y), label="sine")
        with pytest.warns(UserWarning):
            value = asymptotic_hit_prob(drift, c=1.0, alpha=1.0)
        assert value == pytest.approx(math.erf(1.0), rel=1e-6)

    def test_contract_violations(self):
        with pytest.raises(ParameterError):
            asymptotic_hit_prob(ZERO, c=1.0, alpha=1.0)  # slope 0 at the origin
        shifted = DriftFn1D(lambda y: 1.0 + y, derivative_at_zero=1.0)
        with pytest.raises(ParameterError):
            asymptotic_hit_prob(shifted, c=1.0, alpha=1.0)  # F(0) != 0


class TestCondExpHitTime:
    def test_driftless_closed_form(self):
        # (ell^2 - x^2) / (3 eps^2)
        assert cond_exp_hit_time(ZERO, 0.1, 0.1, 0.05) == pytest.approx(0.25, abs=1e-9)
        assert cond_exp_hit_time(ZERO, 0.2, 0.1, 0.02) == pytest.approx(
            (0.01 - 0.0004) / (3 * 0.04), rel=1e-9
        )

    def test_start_at_level_is_zero(self):
        assert cond_exp_hit_time(LINEAR, 0.05, 0.1, 0.1) == pytest.approx(0.0, abs=1e-12)

    def test_simpson_mode_agrees_with_adaptive(self):
        for drift, eps, x in ((LINEAR, 0.05, 0.02), (LOGISTIC, 0.04, 0.05)):
            a = cond_exp_hit_time(drift, eps, 0.1, x)
            b = cond_exp_hit_time(drift, eps, 0.1, x, method="simpson")
            assert b == pytest.approx(a, rel=1e-7)

    def test_overflow_regime_raises(self):
        with pytest.raises(QuadratureError):
            cond_exp_hit_time(LINEAR, 1e-3, 0.1, 0.02)

    def test_shorter_than_deterministic_for_tiny_starts(self):
        # Deterministic passage from x under dz = z dt takes log(ell/x),
        # unbounded as x -> 0; the conditional expected time stays bounded.
        eps, ell = 0.05, 0.1
        for x in (1e-4, 1e-5):
            conditional = cond_exp_hit_time(LINEAR, eps, ell, x)
            deterministic = math.log(ell / x)
            assert conditional < deterministic

    def test_x_range_validated(self):
        with pytest.raises(ParameterError):
            cond_exp_hit_time(ZERO, 0.1, 0.1, 0.0)


class TestPsiLimit:
    def test_driftless_closed_form(self):
        assert psi_limit(ZERO, 0.1, 0.1) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_conditional_time_converges_to_psi(self):
        eps, ell = 0.1, 0.1
        psi = psi_limit(LINEAR, eps, ell, TIGHT)
        gaps = [
            abs(cond_exp_hit_time(LINEAR, eps, ell, frac * ell, TIGHT) - psi)
            for frac in (1e-2, 1e-3, 1e-4)
        ]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_second_order_correction_rate(self):
        # (Psi - E_x) / x^2 -> 1 / (3 eps^2) for drifts with positive slope.
        eps, ell = 0.05, 0.1
        target = 1.0 / (3.0 * eps * eps)
        psi = psi_limit(LINEAR, eps, ell, TIGHT)
        for x in (1e-3, 5e-4):
            ratio = (psi - cond_exp_hit_time(LINEAR, eps, ell, x, TIGHT)) / (x * x)
            assert ratio == pytest.approx(target, rel=5e-4)

    def test_simpson_mode_agrees_with_adaptive(self):
        a = psi_limit(LOGISTIC, 0.05, 0.1)
        b = psi_limit(LOGISTIC, 0.05, 0.1, method="simpson")
        assert b == pytest.approx(a, rel=1e-7)


class TestErfAsymptotics:
    def test_saturating_regime(self):
        info = erf_asymptotics(c=1.0, alpha=0.5, epsilon=1e-4)
        assert info.regime == "tends_to_one"
        assert abs(info.value - 1.0) < 1e-6

    def test_fixed_regime_is_noise_independent(self):
        a = erf_asymptotics(c=0.7, alpha=1.0, epsilon=1e-2)
        b = erf_asymptotics(c=0.7, alpha=1.0, epsilon=1e-6)
        assert a.value == b.value == pytest.approx(math.erf(0.7), rel=1e-14)
        assert a.regime == "constant_erf_c"

    def test_vanishing_regime_matches_linearization(self):
        info = erf_asymptotics(c=1.0, alpha=2.0, epsilon=1e-3)
        assert info.regime == "power_law_decay"
        assert info.value / info.leading_order == pytest.approx(1.0, abs=1e-4)


class TestMonteCarloAgreement:
    """Quadrature formulas against the trajectory engine, drift by drift.

    Grid-point monitoring misses within-step excursions, which shifts each
    absorbing barrier outward by beta * eps * sqrt(dt) with beta =
    -zeta(1/2)/sqrt(2*pi) (the standard continuity correction for discretely
    monitored barriers).  The engine realizes exactly that discretized
    problem, so the quadrature side is evaluated on the widened corridor;
    the two routes then agree to pure Monte-Carlo accuracy.  Intervals are
    taken at the family-wise level (99.9% / 4 SE) because eighteen
    comparisons share this test.
    """

    N_PATHS = 100_000
    BETA = 0.5826
    CASES = (
        ("zero", ZERO, 0.1, (0.03, 0.05, 0.08)),
        ("linear", LINEAR, 0.05, (0.02, 0.05, 0.08)),
        ("logistic", LOGISTIC, 0.05, (0.02, 0.05, 0.08)),
    )

    def _widened(self, drift: DriftFn1D, eps: float, ell: float, x: float, dt: float):
        delta = self.BETA * eps * math.sqrt(dt)
        shifted = DriftFn1D(lambda y: drift(y - delta), label=f"{drift.label}+shift")
        p = hit_prob_1d(shifted, eps, ell + 2.0 * delta, x + delta)
        t = cond_exp_hit_time(shifted, eps, ell + 2.0 * delta, x + delta)
        return p, t

    @pytest.mark.parametrize("label,drift,eps,xs", CASES, ids=[c[0] for c in CASES])
    def test_hit_probability_and_conditional_time(self, label, drift, eps, xs):
        ell, dt = 0.1, 1e-3
        if label == "zero":
            drift_vec = lambda x: np.zeros_like(x)
        elif label == "linear":
            drift_vec = lambda x: x
        else:
            drift_vec = lambda x: x * (1.0 - x)

        for x0 in xs:
            outcomes = run_batch(
                range(self.N_PATHS), x0=np.array([x0]), dt=dt, t_max=200.0,
                epsilon=eps, seed=hash((label, x0)) % 2**32,
                drift_fn=drift_vec, upper=ell, lower=0.0, hit_index=0,
            )
            hits = np.array([o.time for o in outcomes if o.kind is OutcomeKind.ONSET])
            n_hit = len(hits)
            assert sum(o.kind is OutcomeKind.CENSORED for o in outcomes) == 0

            p_corr, t_corr = self._widened(drift, eps, ell, x0, dt)
            lo, hi = wilson_interval(n_hit, self.N_PATHS, confidence=0.999)
            assert lo <= p_corr <= hi

            se = hits.std(ddof=1) / math.sqrt(n_hit)
            assert abs(hits.mean() - t_corr) < 4.0 * se

            # Uncorrected values agree at the known O(eps sqrt(dt)) level:
            # widening both barriers by delta changes the driftless mean by
            # about delta (4 ell - 2 x) / (3 eps^2); allow twice that.
            delta = self.BETA * eps * math.sqrt(dt)
            p_raw = hit_prob_1d(drift, eps, ell, x0)
            t_raw = cond_exp_hit_time(drift, eps, ell, x0)
            assert abs(n_hit / self.N_PATHS - p_raw) < 12.0 * eps * math.sqrt(dt)
            assert abs(hits.mean() - t_raw) < 2.0 * delta * (4.0 * ell - 2.0 * x0) / (3.0 * eps * eps)
