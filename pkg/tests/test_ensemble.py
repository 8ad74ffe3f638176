from __future__ import annotations

import math

import numpy as np
import pytest

from rionset import (
    DEFAULT_PARAMS,
    DEFAULT_X0,
    EnsembleConfig,
    HittingOutcome,
    OutcomeKind,
    ParameterError,
    State,
    aggregate_outcomes,
    onset_indicator,
    onset_probability_curve,
    run_ensemble,
    wilson_interval,
)
from rionset.ensemble import resolve_workers


def _mk_outcome(kind: OutcomeKind, time: float, stream: int) -> HittingOutcome:
    return HittingOutcome(kind, time, None, stream=stream)


class TestWilsonInterval:
    def test_brackets_the_point_estimate(self):
        lo, hi = wilson_interval(80, 100)
        assert 0.0 <= lo <= 0.8 <= hi <= 1.0

    def test_degenerate_counts_stay_in_unit_interval(self):
        lo, hi = wilson_interval(0, 50)
        assert lo == 0.0 and 0.0 < hi < 0.2
        lo, hi = wilson_interval(50, 50)
        assert 0.8 < lo < 1.0 and hi == 1.0

    def test_coverage_of_a_fair_coin(self, rng):
        # Synthetic Bernoulli(0.5) outcomes injected in place of trajectories:
        # the 95% interval should cover 0.5 about 95% of the time.
        n_repeats, n_draws = 1000, 100
        covered = 0
        for _ in range(n_repeats):
            k = rng.binomial(n_draws, 0.5)
            lo, hi = wilson_interval(int(k), n_draws)
            covered += lo <= 0.5 <= hi
        assert 0.93 <= covered / n_repeats <= 0.97

    def test_input_validation(self):
        with pytest.raises(ParameterError):
            wilson_interval(0, 0)
        with pytest.raises(ParameterError):
            wilson_interval(1, 10, confidence=1.5)


class TestAggregation:
    def test_counts_and_moments(self):
        outcomes = [
            _mk_outcome(OutcomeKind.ONSET, 2.0, 0),
            _mk_outcome(OutcomeKind.ONSET, 4.0, 1),
            _mk_outcome(OutcomeKind.EXTINCTION, 1.0, 2),
            _mk_outcome(OutcomeKind.CENSORED, 50.0, 3),
        ]
        stats = aggregate_outcomes(outcomes)
        assert (stats.n_onset, stats.n_extinct, stats.n_censored) == (2, 1, 1)
        assert stats.n_onset + stats.n_extinct + stats.n_censored == stats.n_realizations
        assert stats.p_hat == 0.5
        assert stats.tau_mean == 3.0
        assert stats.tau_var == 2.0
        assert sum(stats.hist_counts) == stats.n_onset

    def test_order_independence(self, rng):
        outcomes = [
            _mk_outcome(
                OutcomeKind.ONSET if rng.random() < 0.7 else OutcomeKind.EXTINCTION,
                float(rng.uniform(1.0, 20.0)),
                stream,
            )
            for stream in range(500)
        ]
        shuffled = list(outcomes)
        rng.shuffle(shuffled)
        a = aggregate_outcomes(outcomes)
        b = aggregate_outcomes(shuffled)
        assert a == b

    def test_no_onsets_flags_moments(self):
        outcomes = [_mk_outcome(OutcomeKind.EXTINCTION, 1.0, k) for k in range(5)]
        stats = aggregate_outcomes(outcomes)
        assert stats.n_onset == 0
        assert stats.tau_mean is None and stats.tau_var is None
        assert stats.hist_counts == ()

    def test_single_onset_has_undefined_variance(self):
        outcomes = [
            _mk_outcome(OutcomeKind.ONSET, 3.0, 0),
            _mk_outcome(OutcomeKind.EXTINCTION, 1.0, 1),
        ]
        stats = aggregate_outcomes(outcomes)
        assert stats.tau_mean == 3.0
        assert stats.tau_var is None

    def test_explicit_bin_override(self):
        outcomes = [_mk_outcome(OutcomeKind.ONSET, float(t), t) for t in range(32)]
        stats = aggregate_outcomes(outcomes, histogram_bins=4)
        assert len(stats.hist_counts) == 4
        assert sum(stats.hist_counts) == 32


class TestRunEnsemble:
    def test_zero_noise_collapses_to_deterministic(self, default_onset):
        cfg = EnsembleConfig(epsilon=0.0, n_realizations=8, seed=3)
        stats = run_ensemble(cfg)
        assert stats.p_hat == 1.0
        assert stats.tau_var == 0.0
        assert stats.tau_mean == default_onset.time

    def test_start_at_level_always_onsets(self):
        cfg = EnsembleConfig(
            x0=State(DEFAULT_X0.u, 0.1, DEFAULT_X0.b), epsilon=0.05, n_realizations=16, seed=3
        )
        stats = run_ensemble(cfg)
        assert stats.p_hat == 1.0 and stats.tau_mean == 0.0

    def test_worker_count_does_not_change_stats(self):
        cfg = EnsembleConfig(epsilon=5e-3, n_realizations=300, seed=11)
        a = run_ensemble(cfg, workers=1)
        b = run_ensemble(cfg, workers=8)
        assert a == b

    def test_stream_offset_changes_the_sample(self):
        cfg = EnsembleConfig(epsilon=2e-2, n_realizations=100, seed=11)
        a = run_ensemble(cfg)
        b = run_ensemble(cfg, stream_offset=100)
        assert a != b

    def test_workers_env_var(self, monkeypatch):
        monkeypatch.setenv("RIONSET_WORKERS", "3")
        assert resolve_workers() == 3
        monkeypatch.setenv("RIONSET_WORKERS", "0")
        with pytest.raises(ParameterError):
            resolve_workers()

    def test_small_noise_onset_probability_tends_to_one(self):
        # p_hat nondecreasing as the noise shrinks, essentially 1 at 1e-4.
        p_hats = []
        for eps in (1e-2, 1e-3, 1e-4):
            cfg = EnsembleConfig(epsilon=eps, n_realizations=200, seed=7)
            p_hats.append(run_ensemble(cfg).p_hat)
        assert p_hats[0] <= p_hats[1] <= p_hats[2]
        assert p_hats[2] >= 0.99


class TestProbabilityCurve:
    def test_probability_rises_with_initial_wind(self):
        cfg = EnsembleConfig(epsilon=0.01, n_realizations=100, seed=5)
        table = onset_probability_curve(
            cfg, "v0", [0.01, 0.03, 0.06], n_experiments=4, n_per_experiment=100
        )
        p = [row[2] for row in table.rows]
        assert p[0] < p[1] <= p[2]
        for row in table.rows:
            assert row[3] <= row[2] <= row[4]  # ci_low <= p_hat <= ci_high

    def test_start_at_level_gives_probability_one(self):
        cfg = EnsembleConfig(epsilon=0.05, n_realizations=50, seed=5)
        table = onset_probability_curve(cfg, "v0", [0.1], n_experiments=2, n_per_experiment=50)
        assert table.rows[0][2] == 1.0


class TestIndicator:
    def test_finds_a_v0_between_the_brackets(self):
        cfg = EnsembleConfig(epsilon=0.01, n_realizations=400, seed=19)
        result = onset_indicator(cfg, target_prob=0.8, tol=5e-4)
        assert result.status in ("ci_match", "bracket_converged")
        assert 0.0 < result.v0 < 0.1
        assert result.ci_low <= result.p_hat <= result.ci_high

    def test_unreachable_target_in_user_bracket(self):
        # Probability at v0 = 0.04 under tiny noise is already 1 > 0.8:
        # a bracket capped below that leaves no crossing point.
        cfg = EnsembleConfig(epsilon=1e-4, n_realizations=50, seed=19)
        result = onset_indicator(cfg, target_prob=0.8, bracket=(0.03, 0.04))
        assert result.status == "no_solution"
        assert result.v0 is None

    def test_bad_inputs(self):
        cfg = EnsembleConfig(epsilon=0.01, n_realizations=10, seed=0)
        with pytest.raises(ParameterError):
            onset_indicator(cfg, target_prob=1.5)
        with pytest.raises(ParameterError):
            onset_indicator(cfg, bracket=(0.2, 0.3))


class TestConfigValidation:
    def test_rejects_bad_population(self):
        with pytest.raises(ParameterError):
            EnsembleConfig(n_realizations=0)

    def test_rejects_negative_noise(self):
        with pytest.raises(ParameterError):
            EnsembleConfig(epsilon=-0.1)
