"""
Convex quadratic testbed f(x) = 1/2 (x - x*)^T A (x - x*).
"""
import logging
from typing import Dict, Optional

import numpy as np

from ..models import GeometryKind, Shape
from ..linalg.vspace import ParamPoint
from .base_problem import Problem, ProblemConstants


logger = logging.getLogger(__name__)


class QuadraticProblem(Problem):
    """Quadratic with a known minimizer; convex, hence star-convex."""

    name = "quadratic"

    def __init__(self, A: np.ndarray, x_star: np.ndarray, sigma: float = 0.0):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.allclose(A, A.T):
            raise ValueError("A must be symmetric")
        super().__init__(Shape.vector(A.shape[0]), sigma)
        self.A = A
        self.x_star = ParamPoint(x_star, self.shape)
        eigenvalues = np.linalg.eigvalsh(A)
        if eigenvalues[0] < -1e-12:
            raise ValueError("A must be positive semidefinite")
        self._constants = ProblemConstants(
            L={
                GeometryKind.EUCLIDEAN: float(eigenvalues[-1]),
                GeometryKind.INFINITY: float(np.sum(np.abs(A))),
            },
            H={GeometryKind.EUCLIDEAN: 0.0, GeometryKind.INFINITY: 0.0},
            x_star=self.x_star,
            F_star=0.0,
            F_lower=0.0,
            star_convex=True,
        )

    def f(self, x: ParamPoint) -> float:
        r = x.data - self.x_star.data
        return 0.5 * float(r @ self.A @ r)

    def grad(self, x: ParamPoint) -> ParamPoint:
        return ParamPoint._wrap(self.A @ (x.data - self.x_star.data), self.shape)

    @property
    def constants(self) -> ProblemConstants:
        return self._constants

    def describe(self) -> Dict[str, object]:
        info = super().describe()
        info["condition"] = self._constants.L[GeometryKind.EUCLIDEAN] / float(np.linalg.eigvalsh(self.A)[0])
        return info


def make_quadratic(dim: int, condition: float, seed: int, sigma: float = 0.0,
                   x_star: Optional[np.ndarray] = None, x_star_scale: float = 1.0) -> QuadraticProblem:
    """
    Random quadratic with spectrum linspace(1, condition) in a random orthonormal basis.

    Args:
        dim: Dimension (>= 1); dim = 1 gives A = [condition]
        condition: Largest eigenvalue (smallest is 1)
        seed: Instance seed
        sigma: Oracle noise level
        x_star: Minimizer; drawn as scale * N(0, I) when omitted
        x_star_scale: Scale of the random minimizer

    Returns:
        QuadraticProblem with L (Euclidean) = condition, H = 0, F* = 0
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if condition < 1:
        raise ValueError("condition must be >= 1")
    rng = np.random.default_rng(seed)
    if dim == 1:
        A = np.array([[float(condition)]])
    else:
        Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
        Q = Q * np.sign(np.diag(R))
        A = (Q * np.linspace(1.0, condition, dim)) @ Q.T
        A = 0.5 * (A + A.T)
    if x_star is None:
        x_star = x_star_scale * rng.standard_normal(dim)
    logger.debug(f"quadratic dim={dim} condition={condition} seed={seed}")
    return QuadraticProblem(A, np.asarray(x_star, dtype=np.float64), sigma)
