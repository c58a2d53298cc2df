"""
Muon versus Orthogonal-SGDM on matrix problems.

Both reference updates see the same noise draws for the same seed. The table is
informational: it records both algorithms' final residuals and momentum-error
traces, per seed and seed-averaged, without declaring a winner.
"""
import logging
from typing import List, Optional, Sequence

from ..models import ComparisonRow, GeometryKind, OptimizerConfig, OrthConfig, Variant
from ..problems.base_problem import Problem
from ..utils import mean
from .runner import run_many


logger = logging.getLogger(__name__)


def muon_vs_osgdm(problem: Problem, sigmas: Sequence[float], etas: Sequence[float], seeds: Sequence[int],
                  alpha: float = 0.1, K: int = 100, orth: Optional[OrthConfig] = None,
                  jobs: Optional[int] = None) -> List[ComparisonRow]:
    """
    Run both reference updates over a (sigma, eta) grid.

    Args:
        problem: Matrix-shaped problem (its sigma is replaced by each grid value)
        sigmas: Noise levels
        etas: Stepsizes
        seeds: Noise seeds shared by both algorithms
        alpha: Momentum weight
        K: Iterations per run
        orth: Orthogonalization settings
        jobs: Parallel runs

    Returns:
        One row per (sigma, eta, algorithm), Muon before OSGDM
    """
    if not problem.shape.is_matrix:
        raise ValueError("Muon/OSGDM comparison needs a matrix-shaped problem")
    orth = orth or OrthConfig()
    rows: List[ComparisonRow] = []
    for sigma in sigmas:
        noisy = problem.with_sigma(sigma)
        for eta in etas:
            for variant in (Variant.MUON_REF, Variant.OSGDM_REF):
                config = OptimizerConfig(
                    variant=variant, geometry=GeometryKind.SPECTRAL, eta=eta, alpha=alpha, K=K, orth=orth,
                )
                records = run_many(config, noisy, seeds, jobs=jobs, record_wall_time=False,
                                   desc=f"{variant.value} sigma={sigma:g} eta={eta:g}")
                traces = [[r.rows[k].momentum_err for k in range(K)] for r in records]
                trace = [mean(seed_trace[k] for seed_trace in traces) for k in range(K)]
                finals = [r.summary.final_residual for r in records]
                rows.append(ComparisonRow(
                    algorithm=variant,
                    sigma=sigma,
                    eta=eta,
                    alpha=alpha,
                    K=K,
                    seeds=[r.seed for r in records],
                    final_residuals=finals,
                    mean_final_residual=mean(finals),
                    mean_min_residual=mean(r.summary.min_residual for r in records),
                    momentum_err_trace=trace,
                    momentum_err_traces=traces,
                ))
                logger.info(f"{variant.value:>10} sigma={sigma:g} eta={eta:g}: "
                            f"mean final residual {rows[-1].mean_final_residual:.6g}")
    return rows
