"""
Directly coded reference updates: Muon, Orthogonal-SGDM and the
majorization-minimization (steepest descent) step.

None of these call the trust-region solver.
"""
import logging

from ..models import OrthConfig, Variant
from ..linalg.geometry import NormGeometry, dual_norm, lmo, orth
from ..linalg.vspace import ParamPoint, axpby
from .base_optimizer import BaseOptimizer, OptimizerState


logger = logging.getLogger(__name__)


def muon_ref_step(state: OptimizerState, G: ParamPoint, eta: float, alpha: float,
                  cfg: OrthConfig) -> OptimizerState:
    """M <- (1 - alpha) M + alpha G;  X <- X - eta orth(M)."""
    M = axpby(1.0 - alpha, state.m, alpha, G)
    X = axpby(1.0, state.x, -eta, orth(M, cfg))
    return state.advance(x=X, m=M)


def osgdm_ref_step(state: OptimizerState, G: ParamPoint, eta: float, alpha: float,
                   cfg: OrthConfig) -> OptimizerState:
    """O <- orth(G);  M <- (1 - alpha) M + alpha O;  X <- X - eta M."""
    O = orth(G, cfg)
    M = axpby(1.0 - alpha, state.m, alpha, O)
    X = axpby(1.0, state.x, -eta, M)
    return state.advance(x=X, m=M)


def mm_ref_step(x: ParamPoint, g: ParamPoint, theta: float, geometry: NormGeometry,
                cfg: OrthConfig) -> ParamPoint:
    """
    Non-Euclidean gradient step x - theta ||g||_* lmo(g).

    Unlike the trust-region step its length scales with the dual norm of the gradient.
    """
    return axpby(1.0, x, -theta * dual_norm(geometry, g), lmo(geometry, g, cfg))


class MuonReference(BaseOptimizer):
    """Muon: orthogonalized momentum."""

    def step(self, state: OptimizerState, g: ParamPoint) -> OptimizerState:
        return muon_ref_step(state, g, self.config.eta, self.config.alpha, self.config.orth)


class OSGDMReference(BaseOptimizer):
    """Orthogonal-SGDM: momentum of orthogonalized gradients."""

    def _initial_momentum(self, g0: ParamPoint) -> ParamPoint:
        # The momentum lives among orthogonalized gradients.
        return orth(g0, self.config.orth)

    def step(self, state: OptimizerState, g: ParamPoint) -> OptimizerState:
        return osgdm_ref_step(state, g, self.config.eta, self.config.alpha, self.config.orth)


REFERENCE_OPTIMIZERS = {
    Variant.MUON_REF: MuonReference,
    Variant.OSGDM_REF: OSGDMReference,
}
