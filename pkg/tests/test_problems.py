"""
Unit tests for the synthetic problems, the stochastic oracle and the constant estimators.
"""
import pytest
import sys
import os

import numpy as np
from scipy.special import expit

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.models import GeometryKind, LossKind, ProblemKind, ProblemSpec, Shape
from src.linalg.vspace import ParamPoint, axpby, euclid_norm
from src.problems.base_problem import estimate_H, estimate_L, gradient_check, noisy_oracle
from src.problems.factory import build_problem
from src.problems.matrix_layer import (
    LOGISTIC_LAMBDA, LOGISTIC_LAMBDA_H, MatrixLayerProblem, make_matrix_layer,
)
from src.problems.quadratic import QuadraticProblem, make_quadratic


def random_points(shape: Shape, count: int, seed: int):
    rng = np.random.default_rng(seed)
    return [ParamPoint(rng.standard_normal(shape.size), shape) for _ in range(count)]


class TestQuadratic:
    """Test the quadratic testbed."""

    def test_one_dimensional(self):
        p = make_quadratic(1, 1.0, seed=0, x_star=np.array([0.0]))
        assert p.f(ParamPoint([3.0])) == pytest.approx(4.5)
        assert p.grad(ParamPoint([3.0])) == ParamPoint([3.0])

    def test_optimum(self):
        p = make_quadratic(6, 10.0, seed=4)
        assert euclid_norm(p.grad(p.constants.x_star)) == pytest.approx(0.0, abs=1e-12)
        assert p.f(p.constants.x_star) == pytest.approx(0.0, abs=1e-12)
        assert p.constants.F_star == 0.0

    def test_constants(self):
        """Largest eigenvalue equals the condition number; H vanishes."""
        p = make_quadratic(5, 7.0, seed=1)
        assert p.constants.L[GeometryKind.EUCLIDEAN] == pytest.approx(7.0)
        assert p.constants.L[GeometryKind.INFINITY] == pytest.approx(float(np.sum(np.abs(p.A))))
        assert p.constants.H[GeometryKind.EUCLIDEAN] == 0.0
        assert p.constants.star_convex

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            QuadraticProblem(np.diag([1.0, -1.0]), np.zeros(2))
        with pytest.raises(ValueError):
            QuadraticProblem(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2))

    def test_star_convexity(self):
        """f(b x* + (1 - b) x) <= b f(x*) + (1 - b) f(x) on sampled pairs."""
        p = make_quadratic(4, 5.0, seed=2)
        rng = np.random.default_rng(9)
        x_star = p.constants.x_star
        for x in random_points(p.shape, 200, seed=3):
            b = rng.uniform()
            mixed = axpby(b, x_star, 1.0 - b, x)
            assert p.f(mixed) <= b * p.f(x_star) + (1.0 - b) * p.f(x) + 1e-10

    def test_gradient_matches_finite_differences(self):
        p = make_quadratic(5, 5.0, seed=1)
        assert gradient_check(p, random_points(p.shape, 10, seed=0)) <= 1e-5


class TestMatrixLayer:
    """Test the single-layer problem."""

    def test_quadratic_loss_single_sample(self):
        p = MatrixLayerProblem(np.array([[1.0, 0.0]]), np.array([[0.0, 0.0]]), LossKind.QUADRATIC)
        X = ParamPoint(np.eye(2))
        assert p.f(X) == pytest.approx(0.5)
        assert np.allclose(p.grad(X).as_array(), [[1.0, 0.0], [0.0, 0.0]])

    def test_analytic_L(self):
        p = MatrixLayerProblem(np.array([[2.0, 0.0]]), np.array([[0.0]]), LossKind.QUADRATIC)
        assert p.constants.L[GeometryKind.SPECTRAL] == pytest.approx(4.0)
        assert p.constants.H[GeometryKind.SPECTRAL] == 0.0

    def test_logistic_targets_must_be_signs(self):
        with pytest.raises(ValueError):
            MatrixLayerProblem(np.ones((2, 2)), np.array([[1.0], [0.5]]), LossKind.LOGISTIC)

    def test_logistic_constants(self):
        """lambda and lambda_H are the maxima of |phi''| and |phi'''| for phi(t) = log(1 + e^-t)."""
        t = np.linspace(-10.0, 10.0, 200001)
        s = expit(t)
        assert np.max(s * (1 - s)) == pytest.approx(LOGISTIC_LAMBDA, rel=1e-6)
        assert np.max(np.abs(s * (1 - s) * (1 - 2 * s))) == pytest.approx(LOGISTIC_LAMBDA_H, rel=1e-6)

    def test_logistic_star_convexity_flag(self):
        p = make_matrix_layer(3, 4, 12, LossKind.LOGISTIC, seed=0)
        assert not p.constants.star_convex
        assert p.constants.F_lower == 0.0
        assert p.constants.F_star is None

    def test_least_squares_optimum(self):
        p = make_matrix_layer(2, 3, 20, LossKind.QUADRATIC, seed=1)
        assert euclid_norm(p.grad(p.constants.x_star)) == pytest.approx(0.0, abs=1e-10)
        assert p.constants.star_convex

    @pytest.mark.parametrize("loss", [LossKind.LOGISTIC, LossKind.QUADRATIC])
    def test_gradient_matches_finite_differences(self, loss):
        p = make_matrix_layer(3, 4, 16, loss, seed=2)
        assert gradient_check(p, random_points(p.shape, 10, seed=1)) <= 1e-6


class TestOracle:
    """Test the Gaussian stochastic oracle."""

    def test_noiseless_is_exact(self):
        p = make_quadratic(3, 2.0, seed=0)
        x = ParamPoint([1.0, -1.0, 0.5])
        assert noisy_oracle(p, 0.0, x, np.random.default_rng(0)) == p.grad(x)

    def test_unbiased_with_variance_sigma_squared(self):
        sigma, draws = 0.7, 10_000
        p = make_quadratic(4, 3.0, seed=0, sigma=sigma)
        x = ParamPoint([0.3, -0.2, 0.1, 1.0])
        rng = np.random.default_rng(1)
        exact = p.grad(x).data
        noise = np.array([p.oracle(x, rng).data - exact for _ in range(draws)])
        per_coordinate = sigma / np.sqrt(x.shape.size)
        assert np.all(np.abs(noise.mean(axis=0)) <= 5 * per_coordinate / np.sqrt(draws))
        assert np.mean(np.sum(noise ** 2, axis=1)) == pytest.approx(sigma ** 2, rel=0.05)

    def test_reproducible_stream(self):
        p = make_quadratic(3, 2.0, seed=0, sigma=1.0)
        x = ParamPoint([0.0, 0.0, 0.0])
        a = p.oracle(x, np.random.default_rng(42))
        b = p.oracle(x, np.random.default_rng(42))
        assert a == b

    def test_with_sigma(self):
        p = make_quadratic(3, 2.0, seed=0)
        noisy = p.with_sigma(0.5)
        assert noisy.sigma == 0.5
        assert p.sigma == 0.0
        with pytest.raises(ValueError):
            p.with_sigma(-1.0)


class TestEstimators:
    """Test the sampled Lipschitz estimators."""

    def test_estimate_L_quadratic(self):
        p = make_quadratic(2, 5.0, seed=0)
        estimate = estimate_L(p, GeometryKind.EUCLIDEAN, trials=500)
        assert 1.0 - 1e-9 <= estimate <= 5.0 + 1e-9

    def test_estimate_L_zero_problem(self):
        p = QuadraticProblem(np.zeros((2, 2)), np.zeros(2))
        assert estimate_L(p, GeometryKind.EUCLIDEAN, trials=20) == 0.0

    @pytest.mark.parametrize("geometry", [GeometryKind.SPECTRAL, GeometryKind.EUCLIDEAN, GeometryKind.INFINITY])
    def test_estimate_L_below_analytic(self, geometry):
        p = make_matrix_layer(3, 3, 10, LossKind.LOGISTIC, seed=3)
        assert estimate_L(p, geometry, trials=300) <= p.constants.L[geometry] + 1e-9

    def test_estimate_L_sound_over_instances(self):
        """10 random layers x 1000 sampled pairs never exceed the analytic constant."""
        for seed in range(10):
            p = make_matrix_layer(4, 4, 16, LossKind.LOGISTIC, seed=seed)
            estimate = estimate_L(p, GeometryKind.SPECTRAL, trials=1000, rng=np.random.default_rng(seed))
            assert 0.0 < estimate <= p.constants.L[GeometryKind.SPECTRAL] + 1e-9

    def test_estimate_H_quadratic_loss_vanishes(self):
        p = make_matrix_layer(2, 3, 10, LossKind.QUADRATIC, seed=0)
        assert estimate_H(p, GeometryKind.SPECTRAL, trials=50) <= 1e-6

    def test_estimate_H_below_analytic(self):
        p = make_matrix_layer(3, 3, 10, LossKind.LOGISTIC, seed=4)
        analytic = p.constants.H[GeometryKind.SPECTRAL]
        estimate = estimate_H(p, GeometryKind.SPECTRAL, trials=100)
        assert 0.0 < estimate <= analytic * (1 + 1e-6) + 1e-6

    def test_trials_validated(self):
        p = make_quadratic(2, 2.0, seed=0)
        with pytest.raises(ValueError):
            estimate_L(p, GeometryKind.EUCLIDEAN, trials=0)


class TestFactory:
    """Test building problems from config specs."""

    def test_quadratic_spec(self):
        p = build_problem(ProblemSpec(kind=ProblemKind.QUADRATIC, dim=3, condition=4.0, sigma=0.2))
        assert p.shape == Shape.vector(3)
        assert p.sigma == 0.2
        assert p.constants.L[GeometryKind.EUCLIDEAN] == pytest.approx(4.0)

    def test_matrix_layer_spec(self):
        p = build_problem(ProblemSpec(kind=ProblemKind.MATRIX_LAYER, m=2, n=3, N=8))
        assert p.shape == Shape.matrix(2, 3)
        assert p.loss == LossKind.LOGISTIC

    def test_missing_dims(self):
        with pytest.raises(ValueError):
            ProblemSpec(kind=ProblemKind.QUADRATIC)
        with pytest.raises(ValueError):
            ProblemSpec(kind=ProblemKind.MATRIX_LAYER, m=2, n=3)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
