"""
Base optimizer class and the state value every variant passes along.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Optional

from ..models import OptimizerConfig, Shape
from ..linalg.geometry import NormGeometry
from ..linalg.trstep import TrustRegionSpec, InfeasiblePointError, is_feasible
from ..linalg.vspace import ParamPoint, check_shapes


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerState:
    """Iteration counter, iterate, momentum and (extrapolation only) the extrapolated point."""
    k: int
    x: ParamPoint
    m: ParamPoint
    x_bar: Optional[ParamPoint] = None

    def advance(self, **changes) -> "OptimizerState":
        return replace(self, k=self.k + 1, **changes)


class BaseOptimizer(ABC):
    """Base class for all optimizer variants."""

    def __init__(self, config: OptimizerConfig, shape: Shape):
        """
        Initialize base optimizer.

        Args:
            config: Optimizer parameters
            shape: Shape of the optimization variable
        """
        self.config = config
        self.shape = shape
        self.spec = TrustRegionSpec(
            geometry=NormGeometry(kind=config.geometry, shape=shape),
            regularizer=config.regularizer,
            eta=config.eta,
            beta=config.beta,
        )

    @property
    def geometry(self) -> NormGeometry:
        return self.spec.geometry

    def init(self, x0: ParamPoint, g0: ParamPoint) -> OptimizerState:
        """
        Build the initial state with m0 = g0.

        Args:
            x0: Feasible starting point
            g0: Gradient sample at x0

        Returns:
            State at k = 0
        """
        check_shapes(x0, g0)
        if x0.shape != self.shape:
            raise ValueError(f"x0 has shape {x0.shape}, optimizer expects {self.shape}")
        if not is_feasible(self.config.regularizer, x0):
            raise InfeasiblePointError("x0 lies outside dom R")
        return OptimizerState(k=0, x=x0, m=self._initial_momentum(g0))

    def _initial_momentum(self, g0: ParamPoint) -> ParamPoint:
        return g0

    def gradient_point(self, state: OptimizerState) -> ParamPoint:
        """Point at which the next gradient sample must be evaluated."""
        return state.x

    @abstractmethod
    def step(self, state: OptimizerState, g: ParamPoint) -> OptimizerState:
        """Advance one iteration given the gradient sample at gradient_point(state)."""
        pass
