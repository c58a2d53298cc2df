"""
Build problems from their config-file description.
"""
import logging

from ..models import ProblemKind, ProblemSpec
from .base_problem import Problem
from .matrix_layer import make_matrix_layer
from .quadratic import make_quadratic


logger = logging.getLogger(__name__)


def build_problem(spec: ProblemSpec) -> Problem:
    """
    Instantiate the problem a ProblemSpec describes.

    Args:
        spec: Validated problem section of an experiment config

    Returns:
        Problem instance carrying spec.sigma as its oracle noise level
    """
    if spec.kind == ProblemKind.QUADRATIC:
        problem = make_quadratic(
            dim=spec.dim,
            condition=spec.condition,
            seed=spec.seed,
            sigma=spec.sigma,
            x_star_scale=spec.x_star_scale,
        )
    else:
        problem = make_matrix_layer(spec.m, spec.n, spec.N, spec.loss, spec.seed, sigma=spec.sigma)
    logger.info(f"Built {problem.name} problem {problem.shape} (sigma={spec.sigma:g})")
    return problem
