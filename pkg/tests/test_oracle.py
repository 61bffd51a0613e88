import numpy as np
import pytest

from fairx.fairpolicy import fairness_regret_step
from fairx.merit import MeritFunction
from fairx.oracle import FairOracle, solve_normal_equations

IDENTITY = MeritFunction.identity((1e-6, 3.0))


class TestFit:
    def test_known_passthrough(self):
        np.testing.assert_array_equal(FairOracle.known([1.0, 2.0], IDENTITY).fitted_params, [1.0, 2.0])

    def test_empirical_means(self):
        labels = np.column_stack([np.ones(5), np.zeros(5)])
        np.testing.assert_array_equal(FairOracle.empirical_means(labels, IDENTITY).fitted_params, [1.0, 0.0])

    def test_noiseless_least_squares(self):
        rng = np.random.default_rng(0)
        theta = np.array([0.3, -0.5, 0.8])
        X = rng.normal(size=(200, 3))
        fit = FairOracle.least_squares(X, X @ theta, MeritFunction.exponential(1.0))
        np.testing.assert_allclose(fit.fitted_params, theta, atol=1e-6)
        assert fit.linear

    def test_rank_deficient_without_ridge(self):
        X = np.column_stack([np.ones(4), np.ones(4)])
        with pytest.raises(np.linalg.LinAlgError):
            solve_normal_equations(X.T @ X, X.T @ np.ones(4), ridge=0.0)
        assert np.all(np.isfinite(solve_normal_equations(X.T @ X, X.T @ np.ones(4))))

    def test_errors(self):
        with pytest.raises(ValueError):
            FairOracle.empirical_means(np.zeros((0, 2)), IDENTITY)
        with pytest.raises(ValueError):
            FairOracle("guess", IDENTITY, np.ones(2))
        with pytest.raises(ValueError):
            FairOracle.least_squares(np.ones((3, 2)), np.ones(4), IDENTITY)


class TestOptimalPolicy:
    def test_identity_example(self):
        np.testing.assert_allclose(FairOracle.known([1.0, 2.0], IDENTITY).optimal_policy(), [1 / 3, 2 / 3],
                                   atol=1e-15)

    def test_equal_means_uniform(self):
        np.testing.assert_allclose(FairOracle.known(np.full(3, 0.4), MeritFunction.exponential(5.0)).optimal_policy(),
                                   np.full(3, 1 / 3))

    def test_identical_contexts_uniform(self):
        oracle = FairOracle.known([0.2, 0.7], MeritFunction.exponential(4.0), linear=True)
        np.testing.assert_allclose(oracle.optimal_policy(np.tile([0.5, 0.1], (4, 1))), np.full(4, 0.25))

    def test_zero_regret_against_itself(self):
        oracle = FairOracle.known([0.1, 0.5, 0.3], MeritFunction.exponential(2.0))
        assert fairness_regret_step(oracle.optimal_policy(), oracle.optimal_policy()) == 0.0

    def test_context_checks(self):
        with pytest.raises(ValueError, match="needs"):
            FairOracle.known([0.2, 0.7], IDENTITY, linear=True).optimal_policy()
        with pytest.raises(ValueError, match="no contexts"):
            FairOracle.known([0.2, 0.7], IDENTITY).optimal_policy(np.ones((2, 2)))
        with pytest.raises(ValueError, match="dimension"):
            FairOracle.known([0.2, 0.7], IDENTITY, linear=True).optimal_policy(np.ones((2, 3)))
