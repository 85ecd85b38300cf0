import math
import warnings

import numpy as np
import pytest

from branchkit.analysis import ks_two_sample, moment_report
from branchkit.discrete import (
    DiscreteParams,
    coupled_values_at,
    increment_values_at,
    population_values_at,
    renormalized_brackets_at,
    renormalized_params,
    renormalized_values_at,
    simulate_coupled_pair,
    simulate_increment,
    simulate_population,
    simulate_renormalized,
    total_rates,
)
from branchkit.interaction import InteractionFunction

F0 = InteractionFunction.zero()
LOG11 = InteractionFunction.logistic(1.0, 1.0)


class TestTotalRates:
    def test_logistic_telescoping_example(self):
        # f(z) = 2z - z^2: increments +1 then -1 at k = 1, 2
        assert total_rates(InteractionFunction.logistic(2.0, 1.0), 1.0, 1.0, 2) \
            == (3.0, 3.0)

    def test_no_interaction(self):
        assert total_rates(F0, 2.0, 3.0, 5) == (10.0, 15.0)

    @pytest.mark.parametrize("f", [
        LOG11,
        InteractionFunction.linear(3.0),
        InteractionFunction.custom(np.arange(0.0, 130.0),
                                   2.0 * np.arange(0.0, 130.0)
                                   - np.arange(0.0, 130.0) ** 2 / 50.0,
                                   beta=2.0),
    ])
    def test_birth_minus_death_telescopes(self, f):
        lam, mu = 1.0, 2.0
        for k in range(1, 101):
            birth, death = total_rates(f, lam, mu, k)
            want = (lam - mu) * k + f(float(k))
            assert birth - death == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            total_rates(F0, 1.0, 1.0, 0)


class TestSimulatePopulation:
    def test_pure_death_extinction_time(self):
        # T = Exp(3) + Exp(2) + Exp(1) waiting times: mean 11/6, var 49/36
        params = DiscreteParams(0.0, 1.0, F0, 3, 50.0)
        times = []
        for r in range(3000):
            path = simulate_population(params, seed=1000 + r)
            assert path.counts[-1] == 0
            times.append(path.jump_times[-1])
        se = math.sqrt(49.0 / 36.0 / len(times))
        assert abs(np.mean(times) - 11.0 / 6.0) < 3 * se

    def test_yule_mean(self):
        params = DiscreteParams(1.0, 0.0, F0, 1, 1.0)
        vals = population_values_at(params, 1.0, 10_000, seed=2).astype(float)
        se = math.sqrt((math.e ** 2 - math.e) / vals.size)
        assert abs(vals.mean() - math.e) < 3 * se

    def test_no_ancestors_is_empty(self):
        path = simulate_population(DiscreteParams(1.0, 1.0, LOG11, 0, 2.0), seed=5)
        assert path.n_events == 0
        assert path.value_at(1.5) == 0.0

    def test_path_invariants(self):
        path = simulate_population(DiscreteParams(1.0, 1.0, LOG11, 4, 6.0), seed=17)
        path.validate()

    def test_determinism(self):
        params = DiscreteParams(1.0, 1.0, LOG11, 3, 3.0)
        a = simulate_population(params, seed=99)
        b = simulate_population(params, seed=99)
        c = simulate_population(params, seed=100)
        np.testing.assert_array_equal(a.jump_times, b.jump_times)
        np.testing.assert_array_equal(a.counts, b.counts)
        assert a.n_events != c.n_events or not np.array_equal(a.jump_times, c.jump_times)

    def test_event_cap_flagged(self):
        params = DiscreteParams(5.0, 0.0, F0, 5, 10.0, max_events=20)
        with pytest.warns(RuntimeWarning):
            path = simulate_population(params, seed=3)
        assert path.truncated_by_cap
        assert path.n_events <= 20

    def test_custom_range_exhaustion_raises(self):
        f = InteractionFunction.custom(np.arange(0.0, 4.0), np.zeros(4))
        params = DiscreteParams(8.0, 0.0, f, 2, 10.0)
        with pytest.raises(ValueError, match="tabulated range"):
            simulate_population(params, seed=6)


class TestIncrement:
    def test_zero_start_stays_zero(self):
        params = DiscreteParams(1.0, 1.0, LOG11, 2, 1.0)
        base = simulate_population(params, seed=8)
        v = simulate_increment(params, base, 0, seed=9)
        assert v.n_events == 0 and v.initial_count == 0

    def test_decoupled_when_no_interaction(self):
        # V^{1,3} given X^1 has the law of an independent X^2 when f = 0
        params = DiscreteParams(1.0, 1.0, F0, 1, 1.0)
        _, v = increment_values_at(params, 3, 1.0, 3000, seed=21)
        ref = population_values_at(DiscreteParams(1.0, 1.0, F0, 2, 1.0),
                                   1.0, 3000, seed=22).astype(float)
        assert ks_two_sample(v.astype(float), ref) < 0.05

    def test_coupling_consistency_ks(self):
        # X^2 + V^{2,3} must match X^3 in law (10^4 replicates, stat < 0.03)
        params = DiscreteParams(1.0, 1.0, LOG11, 2, 1.0)
        xm, v = increment_values_at(params, 3, 1.0, 10_000, seed=31)
        direct = population_values_at(DiscreteParams(1.0, 1.0, LOG11, 3, 1.0),
                                      1.0, 10_000, seed=32).astype(float)
        assert ks_two_sample((xm + v).astype(float), direct) < 0.03


class TestRenormalizedSpec:
    def test_initial_flooring(self):
        assert renormalized_params(1.0, 10, F0).initial_value == 1.0
        assert renormalized_params(0.05, 10, F0).initial_value == 0.0

    def test_no_interaction_rates(self):
        spec = renormalized_params(1.0, 10, F0)
        assert spec.rates(10) == (200.0, 200.0)
        assert spec.mass_per_individual == pytest.approx(0.1)

    def test_rate_difference_telescopes_to_f(self):
        spec = renormalized_params(1.0, 20, LOG11)
        for k in (1, 7, 35):
            birth, death = spec.rates(k)
            assert birth - death == pytest.approx(20 * LOG11(k / 20), abs=1e-9)


class TestRenormalizedSimulation:
    def test_critical_mean_is_conserved(self):
        vals = renormalized_values_at(1.0, 50, F0, 1.0, 5000, seed=41)
        rep = moment_report(vals)
        assert abs(rep.mean - 1.0) < 3 * rep.standard_error

    def test_jumps_and_absorption(self):
        path, _ = simulate_renormalized(1.0, 25, LOG11, 1.0, seed=43)
        path.validate()
        assert path.denominator == 25

    def test_mean_bound_gronwall(self):
        # E[Z_t] <= x e^{beta t} with beta = 1 for the logistic drift
        vals = renormalized_values_at(1.0, 100, LOG11, 1.0, 3000, seed=47)
        rep = moment_report(vals)
        assert rep.mean <= math.e + 3 * rep.standard_error

    def test_second_moment_bounded_in_N(self):
        for N in (10, 50, 100):
            for t in (0.25, 1.0):
                vals = renormalized_values_at(1.0, N, LOG11, t, 1500,
                                              seed=53 + N)
                assert np.mean(vals ** 2) < 10.0

    def test_bracket_means_agree(self):
        pred, real = renormalized_brackets_at(1.0, 20, LOG11, 1.0, 2000, seed=59)
        diff = pred.mean() - real.mean()
        se = math.sqrt(pred.var(ddof=1) / pred.size + real.var(ddof=1) / real.size)
        assert abs(diff) < 3 * se

    def test_brackets_nondecreasing_from_zero(self):
        _, ledger = simulate_renormalized(1.0, 20, LOG11, 1.0, seed=61)
        assert ledger.predictable[0] == 0.0 and ledger.realized[0] == 0.0
        assert np.all(np.diff(ledger.predictable) >= 0)
        assert np.all(np.diff(ledger.realized) >= 0)

    def test_ensemble_determinism(self):
        a = renormalized_values_at(0.5, 30, LOG11, 0.5, 64, seed=67)
        b = renormalized_values_at(0.5, 30, LOG11, 0.5, 64, seed=67)
        np.testing.assert_array_equal(a, b)


class TestCoupledPair:
    def test_equal_starts_give_zero_increment(self):
        zx, v = simulate_coupled_pair(1.0, 1.0, 20, LOG11, 1.0, seed=71)
        assert v.initial_count == 0 and v.n_events == 0

    def test_increment_stays_nonnegative(self):
        for r in range(20):
            zx, v = simulate_coupled_pair(0.5, 1.0, 20, LOG11, 1.0, seed=200 + r)
            zx.validate()
            v.validate()
            if v.n_events:
                assert v.counts.min() >= 0

    def test_decoupled_components_uncorrelated(self):
        z, v = coupled_values_at(0.5, 1.0, 20, F0, 1.0, 4000, seed=73)
        zc = z - z.mean()
        vc = v - v.mean()
        corr = (zc * vc).mean() / math.sqrt(zc.var() * vc.var())
        assert abs(corr) < 3.0 / math.sqrt(z.size)

    def test_floored_initial_masses(self):
        zx, v = simulate_coupled_pair(0.26, 0.51, 4, F0, 0.5, seed=79)
        assert zx.initial_count == 1  # floor(4 * 0.26)
        assert v.initial_count == 1   # floor(4 * 0.51) - 1
