import math

import numpy as np
import pytest

from branchkit.interaction import (
    Classification,
    InteractionFunction,
    QuadratureError,
    classify,
    evaluate,
    hitting_probability,
    scale_function,
    validate_hypotheses,
)


F0 = InteractionFunction.zero()
LOG11 = InteractionFunction.logistic(1.0, 1.0)


class TestEvaluate:
    def test_zero_at_origin(self):
        assert evaluate(LOG11, 0.0) == 0.0
        assert evaluate(InteractionFunction.linear(3.0), 0.0) == 0.0

    def test_logistic_arithmetic(self):
        # theta*z - gamma*z^2 at theta=2, gamma=1, z=2
        assert evaluate(InteractionFunction.logistic(2.0, 1.0), 2.0) == 0.0

    def test_linear_arithmetic(self):
        assert evaluate(InteractionFunction.linear(3.0), 1.5) == 4.5

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            evaluate(LOG11, -0.1)

    def test_custom_interpolates_and_bounds(self):
        grid = np.linspace(0.0, 10.0, 101)
        f = InteractionFunction.custom(grid, 2.0 * grid, beta=2.0)
        assert f(0.05) == pytest.approx(0.1)
        with pytest.raises(ValueError):
            f(10.5)

    def test_custom_requires_zero_at_origin(self):
        with pytest.raises(ValueError):
            InteractionFunction.custom(np.array([0.0, 1.0]), np.array([0.5, 1.0]))

    def test_custom_requires_uniform_grid(self):
        with pytest.raises(ValueError):
            InteractionFunction.custom(np.array([0.0, 1.0, 3.0]),
                                       np.array([0.0, 1.0, 2.0]))

    def test_vectorized(self):
        z = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(LOG11(z), [0.0, 0.0, -2.0])


class TestHypotheses:
    def test_logistic_certifies(self):
        rep = validate_hypotheses(LOG11, grid_max=10.0, grid_step=0.1)
        assert rep.A and rep.B
        assert rep.beta_witness <= 1.0

    def test_linear_witness_is_exact(self):
        rep = validate_hypotheses(InteractionFunction.linear(3.0))
        assert rep.A and rep.B
        assert rep.beta_witness == pytest.approx(3.0, abs=1e-12)

    def test_quadratic_table_fails_increment_bound(self):
        grid = np.linspace(0.0, 10.0, 201)
        f = InteractionFunction.custom(grid, grid ** 2)  # default beta 0
        rep = validate_hypotheses(f, grid_max=10.0)
        assert not rep.A
        assert rep.beta_witness > 0

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError):
            validate_hypotheses(F0, grid_max=0.0)


class TestScaleFunction:
    def test_driftless_is_linear(self):
        # integrand identically 1: S(z) = z - 1
        assert scale_function(F0, 3.0) == pytest.approx(2.0, abs=1e-8)
        assert scale_function(F0, 0.0) == pytest.approx(-1.0, abs=1e-8)

    def test_s_of_one_is_zero(self):
        for f in (F0, LOG11, InteractionFunction.linear(2.0)):
            assert scale_function(f, 1.0) == 0.0

    def test_linear_closed_form(self):
        # f(r)/r = 2 so S(z) = int_1^z e^{-(u-1)} du = 1 - e^{-(z-1)}
        got = scale_function(InteractionFunction.linear(2.0), 5.0)
        assert got == pytest.approx(1.0 - math.exp(-4.0), abs=1e-7)

    def test_strictly_increasing(self):
        zs = np.linspace(0.25, 4.0, 16)
        vals = [scale_function(LOG11, z) for z in zs]
        assert np.all(np.diff(vals) > 0)

    def test_overflow_raises(self):
        # strongly supercritical-negative drift makes the integrand explode
        f = InteractionFunction.logistic(0.0, 5.0)
        with pytest.raises(QuadratureError):
            scale_function(f, 120.0)


class TestHittingProbability:
    def test_driftless_symmetric(self):
        assert hitting_probability(F0, 1.0, 0.0, 2.0) == pytest.approx(0.5, abs=1e-8)

    def test_driftless_linear_scale(self):
        got = hitting_probability(F0, 1.5, 1.0, 3.0)
        assert got == pytest.approx(0.75, abs=1e-8)

    def test_decreasing_in_x_and_in_unit_interval(self):
        f = InteractionFunction.logistic(2.0, 1.0)
        xs = np.linspace(0.6, 1.9, 8)
        ps = [hitting_probability(f, x, 0.5, 2.0) for x in xs]
        assert np.all(np.diff(ps) < 0)
        assert all(0.0 < p < 1.0 for p in ps)

    def test_bad_ordering_rejected(self):
        with pytest.raises(ValueError):
            hitting_probability(F0, 0.5, 1.0, 2.0)


class TestClassify:
    def test_logistic_subcritical(self):
        rep = classify(LOG11)
        assert rep.classification is Classification.SUBCRITICAL
        assert math.isinf(rep.lambda_estimate)

    def test_driftless_subcritical(self):
        assert classify(F0).classification is Classification.SUBCRITICAL

    def test_linear3_supercritical_with_lambda(self):
        # Lambda = int_1^inf e^{-3(u-1)/2} du = 2/3
        rep = classify(InteractionFunction.linear(3.0))
        assert rep.classification is Classification.SUPERCRITICAL
        assert rep.lambda_estimate == pytest.approx(2.0 / 3.0, abs=1e-6)

    def test_logistic_with_competition_always_subcritical(self):
        for theta in (0.5, 1.0, 3.0, 10.0):
            rep = classify(InteractionFunction.logistic(theta, 0.5))
            assert rep.classification is Classification.SUBCRITICAL

    def test_linear_growth_always_supercritical(self):
        for theta in (2.5, 5.0, 8.0):
            rep = classify(InteractionFunction.linear(theta))
            assert rep.classification is Classification.SUPERCRITICAL

    def test_tail_limit_precondition(self):
        with pytest.raises(ValueError):
            classify(F0, tail_limit=5.0)
