"""
Single linear layer F(X) = (1/N) sum_i L_i(X a_i) with logistic or quadratic per-sample losses.

With lambda the gradient-Lipschitz constant of the per-sample loss and lambda_H its
Hessian-Lipschitz constant, the spectral-geometry constants are

    L = lambda * mean ||a_i||_2^2,    H = lambda_H * mean ||a_i||_2^3.
"""
import logging
import math
from typing import Dict

import numpy as np
from scipy import linalg as sla
from scipy.special import expit

from ..models import GeometryKind, LossKind, Shape
from ..linalg.vspace import ParamPoint
from .base_problem import Problem, ProblemConstants


logger = logging.getLogger(__name__)

# sup of the second / third derivative of t -> log(1 + exp(-t)).
LOGISTIC_LAMBDA = 0.25
LOGISTIC_LAMBDA_H = 1.0 / (6.0 * math.sqrt(3.0))

LABEL_FLIP_RATE = 0.1


class MatrixLayerProblem(Problem):
    """
    Problem over X in R^{m x n} built from samples a_i in R^n and targets in R^m.

    Logistic targets are +-1 labels per output coordinate; quadratic targets are real.
    """

    name = "matrix_layer"

    def __init__(self, samples: np.ndarray, targets: np.ndarray, loss: LossKind, sigma: float = 0.0):
        samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        if samples.shape[0] != targets.shape[0]:
            raise ValueError(f"{samples.shape[0]} samples but {targets.shape[0]} targets")
        loss = LossKind(loss)
        if loss == LossKind.LOGISTIC and not np.all(np.abs(targets) == 1.0):
            raise ValueError("logistic targets must be +-1")
        N, n = samples.shape
        m = targets.shape[1]
        super().__init__(Shape.matrix(m, n), sigma)
        self.samples = samples
        self.targets = targets
        self.loss = loss
        self.N = N
        self._constants = self._build_constants()

    @property
    def lam(self) -> float:
        return LOGISTIC_LAMBDA if self.loss == LossKind.LOGISTIC else 1.0

    @property
    def lam_H(self) -> float:
        return LOGISTIC_LAMBDA_H if self.loss == LossKind.LOGISTIC else 0.0

    def _build_constants(self) -> ProblemConstants:
        m = self.shape.dims[0]
        l2 = np.linalg.norm(self.samples, axis=1)
        l1 = np.sum(np.abs(self.samples), axis=1)
        L_two = self.lam * float(np.mean(l2 ** 2))
        H_two = self.lam_H * float(np.mean(l2 ** 3))
        constants = dict(
            L={
                GeometryKind.SPECTRAL: L_two,
                GeometryKind.EUCLIDEAN: L_two,
                GeometryKind.INFINITY: self.lam * m * float(np.mean(l1 ** 2)),
            },
            H={
                GeometryKind.SPECTRAL: H_two,
                GeometryKind.EUCLIDEAN: H_two,
                GeometryKind.INFINITY: self.lam_H * m ** 1.5 * float(np.mean(l1 ** 3)),
            },
        )
        if self.loss == LossKind.QUADRATIC:
            # Least squares: X*^T = argmin ||A X^T - B||_F.
            solution, *_ = sla.lstsq(self.samples, self.targets)
            x_star = ParamPoint(solution.T, self.shape)
            return ProblemConstants(
                **constants, x_star=x_star, F_star=self.f(x_star), F_lower=0.0, star_convex=True
            )
        return ProblemConstants(**constants, F_lower=0.0, star_convex=False)

    def _outputs(self, x: ParamPoint) -> np.ndarray:
        # Row i holds X a_i.
        return self.samples @ x.as_array().T

    def f(self, x: ParamPoint) -> float:
        Z = self._outputs(x)
        if self.loss == LossKind.QUADRATIC:
            return 0.5 * float(np.mean(np.sum((Z - self.targets) ** 2, axis=1)))
        return float(np.mean(np.sum(np.logaddexp(0.0, -self.targets * Z), axis=1)))

    def grad(self, x: ParamPoint) -> ParamPoint:
        Z = self._outputs(x)
        if self.loss == LossKind.QUADRATIC:
            G = Z - self.targets
        else:
            G = -self.targets * expit(-self.targets * Z)
        return ParamPoint(G.T @ self.samples / self.N, self.shape)

    @property
    def constants(self) -> ProblemConstants:
        return self._constants

    def describe(self) -> Dict[str, object]:
        info = super().describe()
        info.update({"N": self.N, "loss": self.loss.value})
        return info


def make_matrix_layer(m: int, n: int, N: int, loss: LossKind, seed: int,
                      sigma: float = 0.0) -> MatrixLayerProblem:
    """
    Random matrix-layer instance.

    Samples are standard normal. Logistic labels are sign(X_true a_i) with a
    fraction of them flipped so no X separates the data perfectly; quadratic
    targets are X_true a_i plus small Gaussian noise.

    Args:
        m: Output dimension
        n: Input dimension
        N: Sample count
        loss: Per-sample loss
        seed: Instance seed
        sigma: Oracle noise level

    Returns:
        MatrixLayerProblem
    """
    if min(m, n, N) < 1:
        raise ValueError("m, n and N must be positive")
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((N, n))
    x_true = rng.standard_normal((m, n))
    clean = samples @ x_true.T
    if LossKind(loss) == LossKind.LOGISTIC:
        labels = np.where(clean >= 0.0, 1.0, -1.0)
        flips = rng.uniform(size=labels.shape) < LABEL_FLIP_RATE
        targets = np.where(flips, -labels, labels)
    else:
        targets = clean + 0.1 * rng.standard_normal(clean.shape)
    logger.debug(f"matrix_layer m={m} n={n} N={N} loss={LossKind(loss).value} seed={seed}")
    return MatrixLayerProblem(samples, targets, loss, sigma)
