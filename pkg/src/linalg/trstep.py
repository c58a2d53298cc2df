"""
Closed-form trust-region steps and the generalized stationarity residual.

The step solves

    argmin_x  <m, x> + R(x)   s.t.  ||x - (1 - beta) x_k|| <= eta

for R = 0 under any supported geometry, and for R = indicator of an
infinity-norm ball (weight clipping) under the infinity geometry, where the
problem separates coordinate-wise.
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models import GeometryKind, OrthConfig, ProxCheck, Regularizer, RegularizerKind
from .geometry import NormGeometry, dual_norm, lmo, primal_norm
from .vspace import ParamPoint, axpby, check_shapes, inner, scale


logger = logging.getLogger(__name__)

# Coordinates within this distance of the clipping bound count as active.
ACTIVE_TOL = 1e-12
FEASIBILITY_TOL = 1e-12
PROX_TOL = 1e-8


class TrustRegionError(ValueError):
    """Base error of the trust-region step."""


class NoClosedFormError(TrustRegionError):
    """Raised for (geometry, regularizer) pairs without a closed-form solver."""


class InfeasiblePointError(TrustRegionError):
    """Raised when a point lies outside dom R."""


class TrustRegionSpec(BaseModel):
    """Geometry, regularizer, radius and center shift of one trust-region step."""
    model_config = ConfigDict(frozen=True)

    geometry: NormGeometry
    regularizer: Regularizer = Field(default_factory=Regularizer)
    eta: float = Field(..., gt=0.0, description="Trust-region radius")
    beta: float = Field(default=0.0, ge=0.0, lt=1.0, description="Weight-decay center shift")

    def with_beta(self, beta: float) -> "TrustRegionSpec":
        return self.model_copy(update={"beta": beta})


def _is_clip(spec: TrustRegionSpec) -> bool:
    return spec.regularizer.kind == RegularizerKind.CLIP_BALL


def _check_supported(spec: TrustRegionSpec) -> None:
    if not _is_clip(spec):
        return
    if spec.regularizer.norm != GeometryKind.INFINITY or spec.geometry.kind != GeometryKind.INFINITY:
        raise NoClosedFormError(
            f"no closed-form solver for clip_ball({spec.regularizer.norm.value}) "
            f"under the {spec.geometry.kind.value} geometry"
        )


def regularizer_value(reg: Regularizer, x: ParamPoint) -> float:
    """R(x): 0 inside dom R, +inf outside."""
    if reg.kind == RegularizerKind.NONE:
        return 0.0
    return 0.0 if is_feasible(reg, x) else math.inf


def is_feasible(reg: Regularizer, x: ParamPoint) -> bool:
    if reg.kind == RegularizerKind.NONE:
        return True
    ball = NormGeometry(kind=reg.norm, shape=x.shape)
    return primal_norm(ball, x) <= reg.radius * (1.0 + FEASIBILITY_TOL) + FEASIBILITY_TOL


def _require_feasible(spec: TrustRegionSpec, x: ParamPoint) -> None:
    if not is_feasible(spec.regularizer, x):
        raise InfeasiblePointError(
            f"point outside the clipping ball of radius {spec.regularizer.radius}"
        )


def tr_step(spec: TrustRegionSpec, x: ParamPoint, m: ParamPoint, cfg: OrthConfig) -> ParamPoint:
    """
    Solve the trust-region subproblem around the center (1 - beta) x.

    Args:
        spec: Geometry, regularizer, radius and weight decay
        x: Current (feasible) iterate
        m: Linear model direction (gradient or momentum)
        cfg: Orthogonalization settings for the spectral geometry

    Returns:
        The minimizer x_{k+1}
    """
    _check_supported(spec)
    check_shapes(x, m)
    _require_feasible(spec, x)

    if not _is_clip(spec):
        return axpby(1.0 - spec.beta, x, -spec.eta, lmo(spec.geometry, m, cfg))

    # Separable box: each coordinate minimizes m_i t over [c_i - eta, c_i + eta] intersected
    # with [-D, D]; a zero coefficient keeps the (clipped) center.
    D = spec.regularizer.radius
    center = (1.0 - spec.beta) * x.data
    step = center - spec.eta * np.sign(m.data)
    return ParamPoint(np.clip(step, -D, D), x.shape)


def _box_residual_terms(x: np.ndarray, grad: np.ndarray, D: float) -> np.ndarray:
    # Minimal |g_i + v_i| over the normal cone of [-D, D] at x_i.
    at_upper = x >= D - ACTIVE_TOL * max(1.0, D)
    at_lower = x <= -D + ACTIVE_TOL * max(1.0, D)
    terms = np.abs(grad)
    terms = np.where(at_upper, np.maximum(grad, 0.0), terms)
    terms = np.where(at_lower, np.maximum(-grad, 0.0), terms)
    return terms


def stationarity_residual(spec: TrustRegionSpec, x: ParamPoint, grad: ParamPoint) -> float:
    """
    Generalized stationarity residual min ||grad + v||_* over v in dR(x).

    With R = 0 this is the dual norm of the gradient; with infinity-norm clipping
    the normal cone of the box cancels gradient components pushing outward.
    """
    _check_supported(spec)
    check_shapes(x, grad)
    _require_feasible(spec, x)
    if not _is_clip(spec):
        return dual_norm(spec.geometry, grad)
    terms = _box_residual_terms(x.data, grad.data, spec.regularizer.radius)
    return float(np.sum(terms))


def reconstruct_subgradient(spec: TrustRegionSpec, center: ParamPoint, x_plus: ParamPoint,
                            m: ParamPoint) -> ParamPoint:
    """
    Subgradient of R at x_plus read off the KKT system m + v + w = 0 of the step.

    Coordinates pinned by the clipping bound but strictly inside the trust region
    carry v_i = -m_i; every other coordinate carries v_i = 0.
    """
    if not _is_clip(spec):
        return ParamPoint.zeros(x_plus.shape)
    D = spec.regularizer.radius
    xp, c, md = x_plus.data, center.data, m.data
    tol = ACTIVE_TOL * max(1.0, D)
    inside_trust = np.abs(xp - c) < spec.eta - tol
    at_upper = (xp >= D - tol) & (md <= 0.0)
    at_lower = (xp <= -D + tol) & (md >= 0.0)
    v = np.where(inside_trust & (at_upper | at_lower), -md, 0.0)
    return ParamPoint(v, x_plus.shape)


def prox_inequality_check(spec: TrustRegionSpec, x: ParamPoint, x_plus: ParamPoint,
                          m: ParamPoint) -> ProxCheck:
    """
    Evaluate R(z) + <m, z - z_+> - R(z_+) - eta ||m + v||_* with z = (1 - beta) x.

    The inequality says this slack is non-negative for the exact step.
    """
    _check_supported(spec)
    check_shapes(x, x_plus)
    center = scale(1.0 - spec.beta, x)
    v = reconstruct_subgradient(spec, center, x_plus, m)
    slack = (
        regularizer_value(spec.regularizer, center)
        + inner(m, axpby(1.0, center, -1.0, x_plus))
        - regularizer_value(spec.regularizer, x_plus)
        - spec.eta * dual_norm(spec.geometry, axpby(1.0, m, 1.0, v))
    )
    return ProxCheck(holds=bool(slack >= -PROX_TOL), slack=float(slack))
