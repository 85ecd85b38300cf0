import numpy as np
import pytest
import scipy.stats

from branchkit.analysis import (
    EmptySampleError,
    SampleSet,
    compare,
    convergence_experiment,
    ks_two_sample,
    moment_report,
)
from branchkit.interaction import InteractionFunction


def brute_force_ks(a, b):
    """Independent oracle: evaluate both ECDFs on the pooled grid directly."""
    pooled = np.concatenate([a, b])
    best = 0.0
    for x in pooled:
        fa = np.mean(a <= x)
        fb = np.mean(b <= x)
        best = max(best, abs(fa - fb))
    return best


class TestKS:
    def test_identical_samples(self):
        a = np.array([0.3, 1.0, 2.0, 5.5])
        assert ks_two_sample(a, a.copy()) == 0.0

    def test_disjoint_supports(self):
        assert ks_two_sample([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]) == 1.0

    def test_interleaved_example(self):
        # ECDFs: F_a jumps at 1, 2; F_b at 1.5, 2.5; max gap 0.5 at x in [1, 1.5)
        assert ks_two_sample([1.0, 2.0], [1.5, 2.5]) == pytest.approx(0.5)

    def test_against_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(size=rng.integers(3, 40))
            b = rng.normal(loc=rng.uniform(-1, 1), size=rng.integers(3, 40))
            assert ks_two_sample(a, b) == pytest.approx(brute_force_ks(a, b), abs=1e-12)

    def test_against_scipy(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.exponential(size=200)
            b = rng.exponential(scale=1.3, size=150)
            want = scipy.stats.ks_2samp(a, b).statistic
            assert ks_two_sample(a, b) == pytest.approx(want, abs=1e-12)

    def test_with_ties(self):
        a = np.array([1.0, 1.0, 1.0, 2.0])
        b = np.array([1.0, 2.0, 2.0, 2.0])
        want = scipy.stats.ks_2samp(a, b).statistic
        assert ks_two_sample(a, b) == pytest.approx(want, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=30), rng.normal(size=50)
        assert ks_two_sample(a, b) == ks_two_sample(b, a)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(5)
        a, b = rng.uniform(size=40), rng.uniform(size=60)
        t = lambda v: np.exp(3.0 * v) + v
        assert ks_two_sample(t(a), t(b)) == pytest.approx(ks_two_sample(a, b))

    def test_empty_rejected(self):
        with pytest.raises(EmptySampleError):
            ks_two_sample([], [1.0])


class TestMoments:
    def test_constant(self):
        rep = moment_report([1.0, 1.0, 1.0, 1.0])
        assert rep.mean == 1.0 and rep.variance == 0.0

    def test_unbiased_divisor(self):
        rep = moment_report([0.0, 2.0])
        assert rep.mean == 1.0
        assert rep.variance == 2.0  # n-1 divisor

    def test_normal_sample_mean(self):
        draws = np.random.default_rng(42).standard_normal(10_000)
        rep = moment_report(draws)
        assert abs(rep.mean) < 3.0 * rep.standard_error
        assert rep.ci_low < rep.mean < rep.ci_high

    def test_too_small(self):
        with pytest.raises(EmptySampleError):
            moment_report([1.0])


class TestSampleSet:
    def test_metadata_carried(self):
        s = SampleSet(np.arange(4.0), label="x", metadata={"seed": 1})
        assert s.count == 4 and s.metadata["seed"] == 1

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            SampleSet(np.array([1.0, np.inf]))


class TestCompare:
    def test_verdict_thresholds(self):
        rng = np.random.default_rng(9)
        a = rng.normal(size=2000)
        b = rng.normal(size=2000)
        rep = compare(a, b, ks_threshold=0.1)
        assert rep.passed
        rep2 = compare(a, b + 3.0, ks_threshold=0.1)
        assert not rep2.passed


class TestConvergenceExperiment:
    def test_table_shape_and_degenerate_n(self):
        f = InteractionFunction.zero()
        rows = convergence_experiment(f, 1.0, 0.5, [1, 4], dt=5e-3,
                                      replicates=300, seed=123)
        assert [r.N for r in rows] == [1, 4]
        for r in rows:
            assert 0.0 <= r.ks_vs_limit <= 1.0
            assert np.isfinite(r.mean) and np.isfinite(r.variance)

    def test_requires_increasing_n(self):
        with pytest.raises(ValueError):
            convergence_experiment(InteractionFunction.zero(), 1.0, 0.5,
                                   [4, 2], 1e-2, 10, 0)
