"""
Base problem class, the Gaussian stochastic oracle and sampled constant estimators.
"""
import copy
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from ..models import GeometryKind, Shape
from ..linalg.geometry import NormGeometry, dual_norm, primal_norm
from ..linalg.vspace import ParamPoint, axpby, scale


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemConstants:
    """Analytic constants of a problem; absent entries are unknown."""
    L: Dict[GeometryKind, float] = field(default_factory=dict)
    H: Dict[GeometryKind, float] = field(default_factory=dict)
    x_star: Optional[ParamPoint] = None
    F_star: Optional[float] = None
    F_lower: Optional[float] = None
    star_convex: bool = False

    @property
    def inf_F(self) -> Optional[float]:
        """inf F if known, otherwise a lower bound of F (which only enlarges Delta_0)."""
        return self.F_star if self.F_star is not None else self.F_lower


class Problem(ABC):
    """Base class for all synthetic objectives."""

    name = "problem"

    def __init__(self, shape: Shape, sigma: float = 0.0):
        """
        Initialize base problem.

        Args:
            shape: Shape of the optimization variable
            sigma: Euclidean standard deviation of the stochastic oracle
        """
        if sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {sigma}")
        self.shape = shape
        self.sigma = sigma

    @abstractmethod
    def f(self, x: ParamPoint) -> float:
        pass

    @abstractmethod
    def grad(self, x: ParamPoint) -> ParamPoint:
        pass

    @property
    @abstractmethod
    def constants(self) -> ProblemConstants:
        pass

    def oracle(self, x: ParamPoint, rng: np.random.Generator) -> ParamPoint:
        """Stochastic gradient g(x; xi) with E||g - grad f||_2^2 = sigma^2."""
        return noisy_oracle(self, self.sigma, x, rng)

    def with_sigma(self, sigma: float) -> "Problem":
        """Same objective, different noise level."""
        if sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {sigma}")
        clone = copy.copy(self)
        clone.sigma = sigma
        return clone

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "shape": str(self.shape), "sigma": self.sigma}


def noisy_oracle(p: Problem, sigma: float, x: ParamPoint, rng: np.random.Generator) -> ParamPoint:
    """
    Exact gradient plus isotropic Gaussian noise with per-coordinate variance sigma^2 / d.

    Args:
        p: Problem providing the exact gradient
        sigma: Noise level (0 returns the exact gradient)
        x: Evaluation point
        rng: Caller-owned random stream

    Returns:
        Gradient sample at x
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    g = p.grad(x)
    if sigma == 0.0:
        return g
    d = x.shape.size
    noise = rng.normal(0.0, sigma / math.sqrt(d), size=d)
    return ParamPoint._wrap(g.data + noise, g.shape)


def _random_point(shape: Shape, rng: np.random.Generator, spread: float) -> ParamPoint:
    return ParamPoint(spread * rng.standard_normal(shape.size), shape)


def _unit_direction(geometry: NormGeometry, rng: np.random.Generator) -> Optional[ParamPoint]:
    u = ParamPoint(rng.standard_normal(geometry.shape.size), geometry.shape)
    size = primal_norm(geometry, u)
    if size == 0.0:
        return None
    return scale(1.0 / size, u)


def estimate_L(p: Problem, geometry: GeometryKind, trials: int = 1000,
               rng: Optional[np.random.Generator] = None, spread: float = 1.0) -> float:
    """
    Sampled lower bound on the gradient Lipschitz constant:
    max over random pairs of ||grad f(x) - grad f(x')||_* / ||x - x'||.

    Args:
        p: Problem
        geometry: Norm in which to measure
        trials: Number of random pairs
        rng: Random stream (seed 0 if omitted)
        spread: Standard deviation of the sampled points

    Returns:
        The largest observed ratio (0 if the gradient is constant)
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    norms = NormGeometry(kind=geometry, shape=p.shape)
    best = 0.0
    for _ in range(trials):
        x = _random_point(p.shape, rng, spread)
        u = _unit_direction(norms, rng)
        if u is None:
            continue
        t = spread * rng.uniform(0.1, 1.0)
        x_prime = axpby(1.0, x, t, u)
        diff = axpby(1.0, p.grad(x), -1.0, p.grad(x_prime))
        best = max(best, dual_norm(norms, diff) / primal_norm(norms, axpby(1.0, x, -1.0, x_prime)))
    logger.debug(f"estimate_L({p.name}, {geometry.value}) = {best:.6g}")
    return best


def hessian_vector_product(p: Problem, x: ParamPoint, v: ParamPoint, h: float = 1e-4) -> ParamPoint:
    """Central-difference Hessian-vector product (grad f(x + h v) - grad f(x - h v)) / 2h."""
    plus = p.grad(axpby(1.0, x, h, v))
    minus = p.grad(axpby(1.0, x, -h, v))
    return scale(0.5 / h, axpby(1.0, plus, -1.0, minus))


def estimate_H(p: Problem, geometry: GeometryKind, trials: int = 200,
               rng: Optional[np.random.Generator] = None, spread: float = 1.0, h: float = 1e-4) -> float:
    """
    Sampled lower bound on the Hessian Lipschitz constant:
    max over pairs of ||(hess f(x) - hess f(x')) u||_* / ||x - x'|| with u = (x - x') / ||x - x'||.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    norms = NormGeometry(kind=geometry, shape=p.shape)
    best = 0.0
    for _ in range(trials):
        x = _random_point(p.shape, rng, spread)
        u = _unit_direction(norms, rng)
        if u is None:
            continue
        t = spread * rng.uniform(0.1, 1.0)
        x_prime = axpby(1.0, x, -t, u)
        diff = axpby(1.0, hessian_vector_product(p, x, u, h), -1.0, hessian_vector_product(p, x_prime, u, h))
        best = max(best, dual_norm(norms, diff) / t)
    logger.debug(f"estimate_H({p.name}, {geometry.value}) = {best:.6g}")
    return best


def gradient_check(p: Problem, points: Iterable[ParamPoint], h: float = 1e-5) -> float:
    """
    Compare grad against central finite differences of f.

    Returns:
        Worst gap max_i |fd_i - grad_i| / max(1, max_i |grad_i|) over the points
    """
    worst = 0.0
    for x in points:
        g = p.grad(x).data
        fd = np.empty_like(g)
        base = x.data
        for i in range(base.size):
            e = np.zeros_like(base)
            e[i] = h
            fd[i] = (p.f(x.with_array(base + e)) - p.f(x.with_array(base - e))) / (2.0 * h)
        gap = float(np.max(np.abs(fd - g))) / max(1.0, float(np.max(np.abs(g))))
        worst = max(worst, gap)
    return worst
