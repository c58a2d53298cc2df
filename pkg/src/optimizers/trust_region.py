"""
Trust-region gradient methods: deterministic steps, momentum, weight decay and extrapolation.
"""
import logging

from ..models import OptimizerConfig, Shape, Variant
from ..linalg.trstep import tr_step
from ..linalg.vspace import ParamPoint, axpby
from .base_optimizer import BaseOptimizer, OptimizerState
from .reference import REFERENCE_OPTIMIZERS


logger = logging.getLogger(__name__)


class TrustRegionOptimizer(BaseOptimizer):
    """
    Deterministic trust-region steps (with or without weight decay) and the
    momentum variants.

    DetTR / DetTRDecay feed the exact gradient into the step. Momentum /
    MomentumDecay average the samples first: m <- (1 - alpha) m + alpha g.
    """

    MOMENTUM_VARIANTS = (Variant.MOMENTUM, Variant.MOMENTUM_DECAY)

    def __init__(self, config: OptimizerConfig, shape: Shape):
        super().__init__(config, shape)
        if config.variant not in (Variant.DET_TR, Variant.DET_TR_DECAY) + self.MOMENTUM_VARIANTS:
            raise ValueError(f"{config.variant.value} is not a trust-region variant")

    def step(self, state: OptimizerState, g: ParamPoint) -> OptimizerState:
        if self.config.variant in self.MOMENTUM_VARIANTS:
            m = axpby(1.0 - self.config.alpha, state.m, self.config.alpha, g)
        else:
            m = g
        x = tr_step(self.spec, state.x, m, self.config.orth)
        return state.advance(x=x, m=m)


class ExtrapolationOptimizer(BaseOptimizer):
    """
    Momentum with gradients sampled at an extrapolated point:

        m_{k+1} = (1 - alpha) m_k + alpha g(x_bar_k)
        x_{k+1} = trust-region step around (1 - beta) x_k
        x_bar_{k+1} = x_k + gamma (x_{k+1} - x_k)
    """

    def __init__(self, config: OptimizerConfig, shape: Shape):
        super().__init__(config, shape)
        if config.variant != Variant.EXTRAPOLATION:
            raise ValueError(f"{config.variant.value} is not the extrapolation variant")

    def init(self, x0: ParamPoint, g0: ParamPoint) -> OptimizerState:
        state = super().init(x0, g0)
        return OptimizerState(k=0, x=state.x, m=state.m, x_bar=x0)

    def gradient_point(self, state: OptimizerState) -> ParamPoint:
        return state.x_bar

    def step(self, state: OptimizerState, g: ParamPoint) -> OptimizerState:
        m = axpby(1.0 - self.config.alpha, state.m, self.config.alpha, g)
        x_new = tr_step(self.spec, state.x, m, self.config.orth)
        x_bar = axpby(1.0, state.x, self.config.effective_gamma, axpby(1.0, x_new, -1.0, state.x))
        return state.advance(x=x_new, m=m, x_bar=x_bar)


def build_optimizer(config: OptimizerConfig, shape: Shape) -> BaseOptimizer:
    """
    Create the optimizer object for a config.

    Args:
        config: Optimizer parameters
        shape: Shape of the optimization variable

    Returns:
        Optimizer exposing init/step/gradient_point
    """
    if config.variant == Variant.EXTRAPOLATION:
        return ExtrapolationOptimizer(config, shape)
    if config.variant.reference:
        return REFERENCE_OPTIMIZERS[config.variant](config, shape)
    return TrustRegionOptimizer(config, shape)


def init(config: OptimizerConfig, x0: ParamPoint, g0: ParamPoint) -> OptimizerState:
    return build_optimizer(config, x0.shape).init(x0, g0)


def step(config: OptimizerConfig, state: OptimizerState, g: ParamPoint) -> OptimizerState:
    return build_optimizer(config, state.x.shape).step(state, g)
