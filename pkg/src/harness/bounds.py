"""
Theorem and lemma inequalities evaluated on recorded runs.

Deterministic statements must hold on every run; stochastic ones are checked on
the mean over seeds, which stands in for the expectation.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from ..config import settings
from ..models import (
    BoundConstants, BoundReport, OptimizerConfig, RegularizerKind, RunRecord, TheoremId, Variant,
)
from ..linalg.geometry import NormGeometry, primal_norm
from ..linalg.trstep import prox_inequality_check
from ..linalg.vspace import ParamPoint
from ..optimizers.trust_region import build_optimizer
from ..problems.base_problem import Problem
from ..utils import mean


logger = logging.getLogger(__name__)


class BoundCheckError(ValueError):
    """Raised when a check lacks constants, records or an applicable variant."""


def _within(lhs: float, rhs: float, scale: float = 0.0) -> bool:
    slack = settings.bound_rtol * max(abs(rhs), scale) + settings.bound_atol
    return lhs <= rhs + slack


def _require(c: BoundConstants, *names: str) -> None:
    missing = [name for name in names if getattr(c, name) is None]
    if missing:
        raise BoundCheckError(f"missing constants: {', '.join(missing)}")


def constants_for(problem: Problem, config: OptimizerConfig, x0: ParamPoint) -> BoundConstants:
    """
    Collect the constants of a (problem, config, x0) triple.

    For star-convex problems delta0 is F(x0) - F*; otherwise F(x0) minus the best
    known lower bound of F.
    """
    known = problem.constants
    norms = NormGeometry(kind=config.geometry, shape=problem.shape)
    inf_F = known.F_star if known.star_convex and known.F_star is not None else known.inf_F
    return BoundConstants(
        L=known.L.get(config.geometry),
        H=known.H.get(config.geometry),
        sigma=problem.sigma,
        rho=norms.rho,
        delta0=None if inf_F is None else problem.f(x0) - inf_F,
        D=config.regularizer.diameter,
        F_star=known.F_star,
        x0_norm=primal_norm(norms, x0),
        x_star_norm=None if known.x_star is None else primal_norm(norms, known.x_star),
        star_convex=known.star_convex,
    )


def applicable_theorems(config: OptimizerConfig) -> List[TheoremId]:
    """Theorems whose algorithm matches the config's variant."""
    clipped = config.regularizer.kind == RegularizerKind.CLIP_BALL
    variant = config.variant
    if variant == Variant.DET_TR:
        return [TheoremId.T1, TheoremId.T8_D] if clipped else [TheoremId.T1]
    if variant == Variant.MOMENTUM:
        return [TheoremId.T2, TheoremId.T9_D] if clipped else [TheoremId.T2]
    if variant == Variant.MUON_REF:
        return [TheoremId.T2]
    if variant == Variant.DET_TR_DECAY:
        return [TheoremId.T4]
    if variant == Variant.MOMENTUM_DECAY:
        return [TheoremId.T5]
    if variant == Variant.EXTRAPOLATION:
        return [TheoremId.T6] if config.beta == 0.0 else [TheoremId.T7]
    return []


def theorem_rhs(theorem: TheoremId, config: OptimizerConfig, c: BoundConstants) -> float:
    """
    Right-hand side of a convergence bound.

    Args:
        theorem: Which bound
        config: eta, alpha, beta, K of the run
        c: Problem constants

    Returns:
        The bound's value

    Raises:
        BoundCheckError: if a constant the bound needs is unknown
    """
    theorem = TheoremId(theorem)
    eta, alpha, beta, K = config.eta, config.alpha, config.beta, config.K
    noise = c.rho * c.sigma

    if theorem == TheoremId.T1:
        _require(c, "L", "delta0")
        return c.delta0 / (eta * K) + 1.5 * c.L * eta
    if theorem == TheoremId.T2:
        _require(c, "L", "delta0")
        return (c.delta0 / (eta * K) + 2.0 * noise / (alpha * K) + 2.0 * math.sqrt(alpha) * noise
                + 3.5 * c.L * eta + 2.0 * c.L * eta / alpha)
    if theorem == TheoremId.T6:
        _require(c, "L", "H", "delta0")
        return (c.delta0 / (eta * K) + 3.5 * c.L * eta + c.H * eta ** 2 / alpha ** 2
                + 2.0 * noise / (alpha * K) + 2.0 * math.sqrt(alpha) * noise)

    if theorem in (TheoremId.T4, TheoremId.T5, TheoremId.T7):
        _require(c, "L", "delta0", "F_star")
        if beta <= 0.0:
            raise BoundCheckError(f"{theorem.value} needs weight decay beta > 0")
        contraction = (1.0 - beta) ** K * c.delta0
        if theorem == TheoremId.T4:
            return contraction + 4.0 * c.L * eta ** 2 / beta
        noise_term = 2.0 * eta * noise * (1.0 / alpha + math.sqrt(alpha) / beta)
        if theorem == TheoremId.T5:
            return contraction + noise_term + 4.0 * c.L * eta ** 2 / beta * (1.0 + 1.0 / alpha)
        _require(c, "H")
        return contraction + noise_term + 4.0 * c.L * eta ** 2 / beta + 4.0 * c.H * eta ** 3 / (alpha ** 2 * beta)

    _require(c, "L", "delta0", "F_star", "D")
    D = c.D
    contraction = (D / (eta + D)) ** K * c.delta0
    if theorem == TheoremId.T8_D:
        return contraction + 1.5 * c.L * D * eta
    return (contraction + 2.0 * math.sqrt(alpha) * D * noise + 2.0 * eta * noise / alpha
            + 1.5 * c.L * D * eta + 2.0 * c.L * D * eta / alpha)


def _hypothesis_issues(theorem: TheoremId, config: OptimizerConfig, c: BoundConstants) -> List[str]:
    issues = []
    if theorem in (TheoremId.T4, TheoremId.T5, TheoremId.T7, TheoremId.T8_D, TheoremId.T9_D) and not c.star_convex:
        issues.append("objective not known to be star-convex")
    if theorem in (TheoremId.T4, TheoremId.T5, TheoremId.T7):
        reach = config.beta * max(c.x0_norm, c.x_star_norm or 0.0)
        if config.eta < reach * (1.0 - 1e-12):
            issues.append(f"eta={config.eta:g} < beta * max(||x0||, ||x*||) = {reach:g}")
    if theorem in (TheoremId.T6, TheoremId.T7) and not config.gamma_matches_theory:
        issues.append(f"gamma={config.effective_gamma:g} != 1/alpha")
    if theorem in (TheoremId.T8_D, TheoremId.T9_D):
        if config.regularizer.kind != RegularizerKind.CLIP_BALL:
            issues.append("no clipping regularizer")
        elif c.x_star_norm is not None and c.x_star_norm > config.regularizer.radius:
            issues.append("x* lies outside the clipping ball")
    return issues


def _same_config(records: Sequence[RunRecord]) -> OptimizerConfig:
    if not records:
        raise BoundCheckError("no records")
    config = records[0].config
    if any(r.config != config for r in records[1:]):
        raise BoundCheckError("records come from different optimizer configs")
    return config


def _require_seeds(records: Sequence[RunRecord], c: BoundConstants, what: str) -> None:
    if c.sigma > 0.0 and len(records) < settings.stochastic_seeds:
        raise BoundCheckError(
            f"{what} needs at least {settings.stochastic_seeds} seeds, got {len(records)}"
        )


def check_bound(theorem: TheoremId, records: Sequence[RunRecord], constants: BoundConstants) -> BoundReport:
    """
    Compare the empirical left-hand side of a theorem with its right-hand side.

    Stationarity theorems (T1, T2, T6) use min_{k=1..K} residual; the others use the
    final suboptimality F(x_K) - F*. Deterministic theorems take the worst run,
    stochastic theorems the mean over seeds.
    """
    theorem = TheoremId(theorem)
    config = _same_config(records)
    rhs = theorem_rhs(theorem, config, constants)

    if theorem.measures_stationarity:
        values = [r.summary.min_residual for r in records]
    else:
        values = [r.rows[-1].F - constants.F_star for r in records]

    if theorem.deterministic:
        lhs = max(values)
        how = "max"
    else:
        _require_seeds(records, constants, theorem.value)
        lhs = mean(values)
        how = "mean"

    issues = _hypothesis_issues(theorem, config, constants)
    for issue in issues:
        logger.warning(f"{theorem.value}: hypothesis violated: {issue}")

    report = BoundReport(
        theorem=theorem.value,
        lhs=lhs,
        rhs=rhs,
        holds=_within(lhs, rhs),
        margin=rhs - lhs,
        n_records=len(records),
        hypotheses_ok=not issues,
        detail=f"{how} over {len(records)} run(s)" + (f"; {'; '.join(issues)}" if issues else ""),
    )
    logger.info(f"{theorem.value}: lhs={lhs:.6g} rhs={rhs:.6g} holds={report.holds}")
    return report


def momentum_error_rhs(config: OptimizerConfig, c: BoundConstants, k: int) -> float:
    """
    (1 - alpha)^{k+1} rho sigma + sqrt(alpha) rho sigma + C with C chosen by variant:
    L eta / alpha (momentum), 2 L eta / alpha (weight decay), H eta^2 / (2 alpha^2)
    (extrapolation) and 2 H eta^2 / alpha^2 (extrapolation with weight decay).
    """
    eta, alpha = config.eta, config.alpha
    noise = c.rho * c.sigma
    base = (1.0 - alpha) ** (k + 1) * noise + math.sqrt(alpha) * noise
    variant = config.variant
    if variant in (Variant.MOMENTUM, Variant.MUON_REF):
        _require(c, "L")
        return base + c.L * eta / alpha
    if variant == Variant.MOMENTUM_DECAY:
        _require(c, "L")
        return base + 2.0 * c.L * eta / alpha
    if variant == Variant.EXTRAPOLATION:
        _require(c, "H")
        if config.beta == 0.0:
            return base + c.H * eta ** 2 / (2.0 * alpha ** 2)
        return base + 2.0 * c.H * eta ** 2 / alpha ** 2
    raise BoundCheckError(f"no momentum-error bound for {variant.value}")


def momentum_error_check(records: Sequence[RunRecord], constants: BoundConstants) -> BoundReport:
    """
    Check the momentum-error envelope at every k.

    With sigma = 0 the bound is checked on every run (worst run per k); otherwise the
    per-k seed mean is compared. The report carries the k with the smallest margin.
    """
    config = _same_config(records)
    _require_seeds(records, constants, "momentum error check")
    worst_margin = math.inf
    worst = (0, 0.0, 0.0)
    holds = True
    for k in range(config.K):
        values = [r.rows[k].momentum_err for r in records]
        if any(v is None for v in values):
            raise BoundCheckError(f"momentum error missing at k={k}")
        lhs = max(values) if constants.sigma == 0.0 else mean(values)
        rhs = momentum_error_rhs(config, constants, k)
        holds = holds and _within(lhs, rhs)
        if rhs - lhs < worst_margin:
            worst_margin = rhs - lhs
            worst = (k, lhs, rhs)
    k, lhs, rhs = worst
    if not config.gamma_matches_theory:
        logger.warning("momentum error check: gamma != 1/alpha")
    report = BoundReport(
        theorem=f"momentum_error[{config.variant.value}]",
        lhs=lhs,
        rhs=rhs,
        holds=holds,
        margin=worst_margin,
        n_records=len(records),
        hypotheses_ok=config.gamma_matches_theory,
        detail=f"worst k={k} of {config.K}",
    )
    logger.info(f"{report.theorem}: worst k={k} lhs={lhs:.6g} rhs={rhs:.6g} holds={holds}")
    return report


def descent_check(record: RunRecord, constants: BoundConstants) -> BoundReport:
    """
    Per-step descent inequality
        F(x_{k+1}) <= F(x_k) - eta res_{k+1} + 2 eta ||grad f(x_{k+1}) - m_{k+1}||_* + 1.5 L eta^2.

    The gradient error is bounded through the recorded momentum error plus L eta;
    it vanishes for deterministic variants.
    """
    config = record.config
    if config.beta != 0.0 or config.variant == Variant.OSGDM_REF:
        raise BoundCheckError("descent inequality needs a trust-region step without weight decay")
    _require(constants, "L")
    eta, L = config.eta, constants.L
    worst_margin = math.inf
    worst = (0, 0.0, 0.0)
    holds = True
    for k in range(config.K):
        now, nxt = record.rows[k], record.rows[k + 1]
        lhs = nxt.F - now.F + eta * nxt.residual
        rhs = 1.5 * L * eta ** 2
        if not config.variant.deterministic:
            if now.momentum_err is None:
                raise BoundCheckError(f"momentum error missing at k={k}")
            rhs += 2.0 * eta * (now.momentum_err + L * eta)
        holds = holds and _within(lhs, rhs, scale=abs(now.F))
        if rhs - lhs < worst_margin:
            worst_margin = rhs - lhs
            worst = (k, lhs, rhs)
    k, lhs, rhs = worst
    return BoundReport(
        theorem="descent", lhs=lhs, rhs=rhs, holds=holds, margin=worst_margin,
        detail=f"worst step k={k} of {config.K}",
    )


def iterate_bound_check(record: RunRecord, constants: BoundConstants) -> BoundReport:
    """
    Weight-decay iterate bounds: beta ||x_k|| <= eta, ||x_{k+1} - x_k|| <= 2 eta and
    ||x_k|| <= max(||x0||, eta / beta) at every k.
    """
    config = record.config
    if config.beta <= 0.0:
        raise BoundCheckError("iterate bounds need weight decay beta > 0")
    eta, beta = config.eta, config.beta
    norms = [r.x_norm for r in record.rows]
    radius = max(norms[0], eta / beta)
    scaled = beta * max(norms)
    within_radius = _within(max(norms), radius)
    steps_ok = _within(record.summary.max_step_norm, 2.0 * eta)
    # beta ||x_k|| <= eta only follows when x0 already satisfies it.
    start_ok = beta * norms[0] <= eta * (1.0 + 1e-12)
    decay_ok = _within(scaled, eta) if start_ok else True
    holds = within_radius and steps_ok and decay_ok
    return BoundReport(
        theorem="iterate_bound",
        lhs=scaled,
        rhs=eta,
        holds=holds,
        margin=eta - scaled,
        hypotheses_ok=start_ok,
        detail=(f"max ||x_k||={max(norms):.6g} <= {radius:.6g}: {within_radius}; "
                f"max step={record.summary.max_step_norm:.6g} <= 2 eta: {steps_ok}"),
    )


def prox_check_run(config: OptimizerConfig, problem: Problem, seed: int,
                   x0: Optional[ParamPoint] = None) -> BoundReport:
    """
    Evaluate the trust-region prox inequality at every step of a run.

    Returns:
        Report with lhs = -min slack and rhs = 0
    """
    if config.variant == Variant.OSGDM_REF:
        raise BoundCheckError("OSGDM does not take trust-region steps")
    optimizer = build_optimizer(config, problem.shape)
    rng = np.random.default_rng(seed)
    x0 = x0 if x0 is not None else ParamPoint.zeros(problem.shape)

    def sample(point: ParamPoint) -> ParamPoint:
        return problem.grad(point) if config.variant.deterministic else problem.oracle(point, rng)

    state = optimizer.init(x0, sample(x0))
    slacks = []
    holds = True
    for _ in range(config.K):
        new_state = optimizer.step(state, sample(optimizer.gradient_point(state)))
        check = prox_inequality_check(optimizer.spec, state.x, new_state.x, new_state.m)
        slacks.append(check.slack)
        holds = holds and check.holds
        state = new_state
    min_slack = min(slacks)
    return BoundReport(
        theorem="prox_inequality", lhs=-min_slack, rhs=0.0, holds=holds, margin=min_slack,
        detail=f"{config.K} steps",
    )
