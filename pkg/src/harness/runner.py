"""
Seeded experiment runner: executes an optimizer on a problem and records trajectories.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..config import settings
from ..models import (
    CorollaryId, InitSpec, OptimizerConfig, OptimizerSpec, Regularizer,
    RegularizerKind, RunRecord, RunRow, RunSummary, Schedule, ScheduleInputs, Variant,
)
from ..linalg.geometry import NormGeometry, dual_norm, primal_norm
from ..linalg.trstep import stationarity_residual
from ..linalg.vspace import ParamPoint, axpby, euclid_norm
from ..optimizers.schedules import schedule
from ..optimizers.trust_region import build_optimizer
from ..problems.base_problem import Problem
from ..utils import mean
from .bounds import applicable_theorems, constants_for, theorem_rhs, BoundCheckError


logger = logging.getLogger(__name__)


def initial_point(init: InitSpec, problem: Problem, regularizer: Regularizer, seed: int = 0) -> ParamPoint:
    """
    Starting point x0, projected into dom R.

    The random start depends only on `seed` (the problem seed), so every run seed
    of an experiment starts from the same x0.
    """
    if init.kind == "zeros":
        x0 = ParamPoint.zeros(problem.shape)
    else:
        rng = np.random.default_rng([seed, 7])
        x0 = ParamPoint(init.scale * rng.standard_normal(problem.shape.size), problem.shape)
    if regularizer.kind == RegularizerKind.CLIP_BALL:
        x0 = x0.with_array(np.clip(x0.data, -regularizer.radius, regularizer.radius))
    return x0


def _schedule_D(corollary: CorollaryId, problem: Problem, spec: OptimizerSpec, x0: ParamPoint) -> Optional[float]:
    if corollary in (CorollaryId.C8, CorollaryId.C9):
        return spec.regularizer.diameter
    x_star = problem.constants.x_star
    if x_star is None:
        return None
    norms = NormGeometry(kind=spec.geometry, shape=problem.shape)
    # eta = beta * D with D >= max(||x0||, ||x*||) keeps the weight-decay iterates bounded.
    return max(primal_norm(norms, x0), primal_norm(norms, x_star))


def resolve_optimizer(spec: OptimizerSpec, problem: Problem, x0: ParamPoint) -> Tuple[OptimizerConfig, Optional[Schedule]]:
    """
    Turn the optimizer section of an experiment config into an OptimizerConfig.

    Schedule-produced parameters fill every field the section leaves unset;
    explicitly given fields win.

    Returns:
        (config, schedule or None)
    """
    params = {
        "variant": spec.variant,
        "geometry": spec.geometry,
        "regularizer": spec.regularizer,
        "orth": spec.orth,
    }
    resolved = None
    if spec.schedule is not None:
        ref = spec.schedule
        constants = problem.constants
        norms = NormGeometry(kind=spec.geometry, shape=problem.shape)
        inf_F = constants.inf_F
        inputs = ScheduleInputs(
            eps=ref.eps,
            L=constants.L.get(spec.geometry),
            H=constants.H.get(spec.geometry),
            sigma=problem.sigma,
            rho=norms.rho,
            delta0=None if inf_F is None else max(problem.f(x0) - inf_F, 0.0),
            D=_schedule_D(ref.corollary, problem, spec, x0),
        )
        resolved = schedule(ref.corollary, inputs)
        params.update(eta=resolved.eta, alpha=resolved.alpha, beta=resolved.beta, K=resolved.K)
        if spec.variant == Variant.EXTRAPOLATION and resolved.gamma is not None:
            params["gamma"] = resolved.gamma
        logger.info(f"Schedule {ref.corollary.value} at eps={ref.eps:g}: "
                    f"eta={resolved.eta:.6g}, alpha={resolved.alpha:.6g}, beta={resolved.beta:.6g}, K={resolved.K}")
    for name in ("eta", "alpha", "beta", "gamma", "K"):
        value = getattr(spec, name)
        if value is not None:
            params[name] = value
    return OptimizerConfig(**params), resolved


def run(config: OptimizerConfig, problem: Problem, seed: int, x0: Optional[ParamPoint] = None,
        record_wall_time: Optional[bool] = None) -> RunRecord:
    """
    Execute K steps of an optimizer and record per-iteration metrics.

    Deterministic variants consume the exact gradient; the others draw from the
    problem's oracle with a stream seeded by `seed`, at x_k (momentum variants)
    or at the extrapolated point (extrapolation).

    Args:
        config: Optimizer parameters
        problem: Objective and oracle
        seed: Seed of the oracle noise
        x0: Starting point (zeros if omitted)
        record_wall_time: Record elapsed milliseconds per row (settings default)

    Returns:
        RunRecord with K + 1 rows
    """
    if record_wall_time is None:
        record_wall_time = settings.record_wall_time
    x0 = x0 if x0 is not None else ParamPoint.zeros(problem.shape)
    rng = np.random.default_rng(seed)
    optimizer = build_optimizer(config, problem.shape)
    spec = optimizer.spec
    norms = optimizer.geometry
    deterministic = config.variant.deterministic

    noise_euclid: List[float] = []
    noise_dual: List[float] = []

    def sample(point: ParamPoint) -> ParamPoint:
        exact = problem.grad(point)
        if deterministic:
            return exact
        g = problem.oracle(point, rng)
        if problem.sigma > 0.0:
            noise = axpby(1.0, g, -1.0, exact)
            noise_euclid.append(euclid_norm(noise))
            noise_dual.append(dual_norm(norms, noise))
        return g

    start = time.perf_counter()
    state = optimizer.init(x0, sample(x0))
    rows: List[RunRow] = []
    step_norms: List[float] = []
    for k in range(config.K + 1):
        x = state.x
        grad = problem.grad(x)
        row = RunRow(
            k=k,
            F=problem.f(x),
            residual=stationarity_residual(spec, x, grad),
            x_norm=primal_norm(norms, x),
        )
        if k < config.K:
            new_state = optimizer.step(state, sample(optimizer.gradient_point(state)))
            row.momentum_err = dual_norm(norms, axpby(1.0, new_state.m, -1.0, grad))
            step_norms.append(primal_norm(norms, axpby(1.0, new_state.x, -1.0, x)))
            state = new_state
        if record_wall_time:
            row.wall_ms = (time.perf_counter() - start) * 1000.0
        rows.append(row)

    summary = summarize(rows, step_norms, problem, noise_euclid, noise_dual)
    record = RunRecord(config=config, problem=problem.describe(), seed=seed, rows=rows, summary=summary)
    record.summary.bounds = _bound_values(config, problem, x0)
    logger.debug(f"run {config.variant.value} seed={seed}: min residual {summary.min_residual:.6g}")
    return record


def summarize(rows: Sequence[RunRow], step_norms: Sequence[float], problem: Problem,
              noise_euclid: Sequence[float] = (), noise_dual: Sequence[float] = ()) -> RunSummary:
    """Summary statistics recomputable from the rows."""
    F_star = problem.constants.F_star
    final = rows[-1]
    later = [r.residual for r in rows[1:]] or [rows[0].residual]
    return RunSummary(
        min_residual=min(later),
        final_residual=final.residual,
        final_F=final.F,
        F_star=F_star,
        final_gap=None if F_star is None else final.F - F_star,
        max_x_norm=max(r.x_norm for r in rows),
        max_step_norm=max(step_norms) if step_norms else 0.0,
        mean_noise_euclid=mean(noise_euclid),
        mean_noise_dual=mean(noise_dual),
    )


def _bound_values(config: OptimizerConfig, problem: Problem, x0: ParamPoint) -> dict:
    constants = constants_for(problem, config, x0)
    values = {}
    for theorem in applicable_theorems(config):
        try:
            values[theorem.value] = theorem_rhs(theorem, config, constants)
        except BoundCheckError as e:
            logger.debug(f"no {theorem.value} bound for this run: {e}")
    return values


def run_many(config: OptimizerConfig, problem: Problem, seeds: Sequence[int], x0: Optional[ParamPoint] = None,
             jobs: Optional[int] = None, record_wall_time: Optional[bool] = None,
             desc: str = "runs") -> List[RunRecord]:
    """
    Run one config over several seeds, in parallel when jobs > 1.

    Returns:
        Records in the order of `seeds`
    """
    if config.variant == Variant.EXTRAPOLATION and not config.gamma_matches_theory:
        logger.warning(
            f"extrapolation with gamma={config.effective_gamma:g} != 1/alpha={1.0 / config.alpha:g}; "
            "the second-order bounds assume gamma = 1/alpha"
        )
    jobs = max(1, jobs or settings.default_jobs)
    seeds = list(seeds)
    disable = not settings.show_progress or len(seeds) < 2
    if jobs == 1:
        return [run(config, problem, s, x0, record_wall_time) for s in tqdm(seeds, desc=desc, disable=disable)]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(run, config, problem, s, x0, record_wall_time) for s in seeds]
        return [f.result() for f in tqdm(futures, desc=desc, disable=disable)]
