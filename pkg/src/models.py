"""
Pydantic models for structured data validation across the library, harness and CLI.
"""
import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ShapeKind(str, Enum):
    """Layout of a point in the optimization space."""
    VECTOR = "vector"
    MATRIX = "matrix"


class GeometryKind(str, Enum):
    """Norm geometries with a closed-form linear maximization oracle."""
    EUCLIDEAN = "euclidean"
    INFINITY = "infinity"
    SPECTRAL = "spectral"


class OrthMethod(str, Enum):
    """How orth(G) is computed."""
    EXACT_SVD = "exact_svd"
    NEWTON_SCHULZ = "newton_schulz"


class RegularizerKind(str, Enum):
    """Supported regularizers R(x)."""
    NONE = "none"
    CLIP_BALL = "clip_ball"


class Variant(str, Enum):
    """Optimizer variants."""
    DET_TR = "det_tr"
    DET_TR_DECAY = "det_tr_decay"
    MOMENTUM = "momentum"
    MOMENTUM_DECAY = "momentum_decay"
    EXTRAPOLATION = "extrapolation"
    MUON_REF = "muon_ref"
    OSGDM_REF = "osgdm_ref"

    @property
    def deterministic(self) -> bool:
        """Deterministic variants consume the exact gradient."""
        return self in (Variant.DET_TR, Variant.DET_TR_DECAY)

    @property
    def reference(self) -> bool:
        return self in (Variant.MUON_REF, Variant.OSGDM_REF)


class CorollaryId(str, Enum):
    """Parameter schedules, numbered after the theorem they instantiate."""
    C1 = "C1"
    C2 = "C2"
    C4 = "C4"
    C5 = "C5"
    C6 = "C6"
    C7 = "C7"
    C8 = "C8"
    C9 = "C9"


class TheoremId(str, Enum):
    """Convergence bounds checked by the harness."""
    T1 = "T1"
    T2 = "T2"
    T4 = "T4"
    T5 = "T5"
    T6 = "T6"
    T7 = "T7"
    T8_D = "T8_D"
    T9_D = "T9_D"

    @property
    def deterministic(self) -> bool:
        return self in (TheoremId.T1, TheoremId.T4, TheoremId.T8_D)

    @property
    def measures_stationarity(self) -> bool:
        """Non-convex theorems bound the min residual, the rest bound final suboptimality."""
        return self in (TheoremId.T1, TheoremId.T2, TheoremId.T6)


class LossKind(str, Enum):
    """Per-sample losses of the matrix-layer problem."""
    LOGISTIC = "logistic"
    QUADRATIC = "quadratic"


class ProblemKind(str, Enum):
    """Synthetic problem families."""
    QUADRATIC = "quadratic"
    MATRIX_LAYER = "matrix_layer"


class SweepParam(str, Enum):
    """Parameters a sweep may vary."""
    ETA = "eta"
    ALPHA = "alpha"
    BETA = "beta"
    SIGMA = "sigma"


class Shape(BaseModel):
    """Vector(d) or Matrix(m, n) layout of a point (row-major)."""
    model_config = ConfigDict(frozen=True)

    kind: ShapeKind = Field(..., description="Vector or matrix layout")
    dims: Tuple[int, ...] = Field(..., description="(d) or (m, n), strictly positive")

    @model_validator(mode="after")
    def _check_dims(self) -> "Shape":
        expected = 1 if self.kind == ShapeKind.VECTOR else 2
        if len(self.dims) != expected:
            raise ValueError(f"{self.kind.value} shape needs {expected} dims, got {self.dims}")
        if any(d <= 0 for d in self.dims):
            raise ValueError(f"dims must be strictly positive, got {self.dims}")
        return self

    @classmethod
    def vector(cls, d: int) -> "Shape":
        return cls(kind=ShapeKind.VECTOR, dims=(d,))

    @classmethod
    def matrix(cls, m: int, n: int) -> "Shape":
        return cls(kind=ShapeKind.MATRIX, dims=(m, n))

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def is_matrix(self) -> bool:
        return self.kind == ShapeKind.MATRIX

    def __str__(self) -> str:
        return "x".join(str(d) for d in self.dims)


class OrthConfig(BaseModel):
    """Configuration of the orthogonalization routine orth(G)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    method: OrthMethod = Field(default=OrthMethod.EXACT_SVD, description="Exact SVD or Newton-Schulz")
    ns_steps: int = Field(default=5, ge=1, description="Newton-Schulz iterations")
    rank_tol: float = Field(default=1e-10, gt=0.0, lt=1.0, description="Relative singular value cutoff")
    ns_coeffs: Tuple[float, float, float] = Field(
        default=(3.4445, -4.7750, 2.0315),
        description="Quintic Newton-Schulz coefficients (a, b, c)"
    )


class Regularizer(BaseModel):
    """R(x): zero, or the indicator of a norm ball of the given radius (weight clipping)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RegularizerKind = Field(default=RegularizerKind.NONE, description="Regularizer family")
    norm: Optional[GeometryKind] = Field(default=None, description="Norm of the clipping ball")
    radius: Optional[float] = Field(default=None, gt=0.0, description="Clipping radius")

    @model_validator(mode="before")
    @classmethod
    def _default_clip_norm(cls, data):
        if isinstance(data, dict) and data.get("kind") in (RegularizerKind.CLIP_BALL, "clip_ball"):
            if data.get("norm") is None:
                data = {**data, "norm": GeometryKind.INFINITY}
        return data

    @model_validator(mode="after")
    def _check_clip(self) -> "Regularizer":
        if self.kind == RegularizerKind.CLIP_BALL:
            if self.radius is None:
                raise ValueError("clip_ball regularizer requires a positive radius")
        elif self.radius is not None or self.norm is not None:
            raise ValueError("radius/norm only apply to the clip_ball regularizer")
        return self

    @classmethod
    def none(cls) -> "Regularizer":
        return cls()

    @classmethod
    def clip_ball(cls, radius: float, norm: GeometryKind = GeometryKind.INFINITY) -> "Regularizer":
        return cls(kind=RegularizerKind.CLIP_BALL, norm=norm, radius=radius)

    @property
    def diameter(self) -> Optional[float]:
        """Diameter of dom R measured in the ball's own norm."""
        if self.kind == RegularizerKind.CLIP_BALL:
            return 2.0 * self.radius
        return None


class OptimizerConfig(BaseModel):
    """Parameters of one optimizer run."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    variant: Variant = Field(..., description="Algorithm variant")
    geometry: GeometryKind = Field(default=GeometryKind.EUCLIDEAN, description="Trust-region norm")
    regularizer: Regularizer = Field(default_factory=Regularizer, description="R(x)")
    eta: float = Field(..., gt=0.0, description="Trust-region radius")
    alpha: float = Field(default=1.0, gt=0.0, le=1.0, description="Momentum weight (1 = no averaging)")
    beta: float = Field(default=0.0, ge=0.0, lt=1.0, description="Weight decay (trust-region center shift)")
    gamma: Optional[float] = Field(default=None, gt=0.0, description="Extrapolation factor; defaults to 1/alpha")
    K: int = Field(..., ge=1, description="Number of iterations")
    orth: OrthConfig = Field(default_factory=OrthConfig, description="Orthogonalization settings")

    @model_validator(mode="after")
    def _check_variant(self) -> "OptimizerConfig":
        if self.variant in (Variant.DET_TR, Variant.MOMENTUM) and self.beta != 0.0:
            raise ValueError(f"{self.variant.value} has no weight decay; use the *_decay variant")
        if self.variant in (Variant.DET_TR_DECAY, Variant.MOMENTUM_DECAY) and self.beta <= 0.0:
            raise ValueError(f"{self.variant.value} requires beta > 0")
        if self.variant.reference:
            if self.geometry != GeometryKind.SPECTRAL:
                raise ValueError(f"{self.variant.value} is defined for the spectral geometry only")
            if self.regularizer.kind != RegularizerKind.NONE or self.beta != 0.0:
                raise ValueError(f"{self.variant.value} takes no regularizer and no weight decay")
        if self.gamma is not None and self.variant != Variant.EXTRAPOLATION:
            raise ValueError("gamma only applies to the extrapolation variant")
        return self

    @property
    def effective_gamma(self) -> float:
        return self.gamma if self.gamma is not None else 1.0 / self.alpha

    @property
    def gamma_matches_theory(self) -> bool:
        return math.isclose(self.effective_gamma, 1.0 / self.alpha, rel_tol=1e-12)


class ScheduleInputs(BaseModel):
    """Problem constants a corollary schedule may consume."""
    eps: float = Field(..., gt=0.0, description="Target precision")
    L: Optional[float] = Field(default=None, description="Gradient Lipschitz constant")
    H: Optional[float] = Field(default=None, description="Hessian Lipschitz constant")
    sigma: Optional[float] = Field(default=None, description="Euclidean noise level")
    rho: Optional[float] = Field(default=None, description="Norm equivalence constant")
    delta0: Optional[float] = Field(default=None, description="F(x0) - inf F")
    D: Optional[float] = Field(default=None, description="||x*|| or diameter of dom R")


class Schedule(BaseModel):
    """Parameters produced by a corollary schedule."""
    corollary: CorollaryId
    eta: float
    alpha: float = 1.0
    beta: float = 0.0
    gamma: Optional[float] = None
    K: int


class ScheduleRef(BaseModel):
    """Reference to a corollary schedule inside an experiment config."""
    model_config = ConfigDict(extra="forbid")

    corollary: CorollaryId = Field(..., description="Corollary whose parameter choice to use")
    eps: float = Field(..., gt=0.0, description="Target precision")


class ProblemSpec(BaseModel):
    """Serializable problem definition."""
    model_config = ConfigDict(extra="forbid")

    kind: ProblemKind = Field(..., description="Problem family")
    seed: int = Field(default=0, description="Instance seed")
    sigma: float = Field(default=0.0, ge=0.0, description="Gradient noise level")
    dim: Optional[int] = Field(default=None, ge=1, description="Quadratic dimension")
    condition: float = Field(default=10.0, ge=1.0, description="Quadratic condition number")
    x_star_scale: float = Field(default=1.0, ge=0.0, description="Scale of the random quadratic optimum")
    m: Optional[int] = Field(default=None, ge=1, description="Matrix-layer rows")
    n: Optional[int] = Field(default=None, ge=1, description="Matrix-layer columns")
    N: Optional[int] = Field(default=None, ge=1, description="Matrix-layer sample count")
    loss: LossKind = Field(default=LossKind.LOGISTIC, description="Matrix-layer loss")

    @model_validator(mode="after")
    def _check_dims(self) -> "ProblemSpec":
        if self.kind == ProblemKind.QUADRATIC and self.dim is None:
            raise ValueError("quadratic problem requires dim")
        if self.kind == ProblemKind.MATRIX_LAYER and None in (self.m, self.n, self.N):
            raise ValueError("matrix_layer problem requires m, n and N")
        return self


class OptimizerSpec(BaseModel):
    """Optimizer section of an experiment config: explicit parameters or a schedule."""
    model_config = ConfigDict(extra="forbid")

    variant: Variant
    geometry: GeometryKind = GeometryKind.EUCLIDEAN
    regularizer: Regularizer = Field(default_factory=Regularizer)
    eta: Optional[float] = Field(default=None, gt=0.0)
    alpha: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    beta: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    gamma: Optional[float] = Field(default=None, gt=0.0)
    K: Optional[int] = Field(default=None, ge=1)
    schedule: Optional[ScheduleRef] = None
    orth: OrthConfig = Field(default_factory=OrthConfig)

    @model_validator(mode="after")
    def _check_parameters(self) -> "OptimizerSpec":
        if self.schedule is None and (self.eta is None or self.K is None):
            raise ValueError("either a schedule or both eta and K must be given")
        return self


class InitSpec(BaseModel):
    """Starting point x0."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["zeros", "random"] = "zeros"
    scale: float = Field(default=1.0, ge=0.0)


class ExperimentConfig(BaseModel):
    """Top-level run configuration file."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="experiment", description="Run group name")
    problem: ProblemSpec
    optimizer: OptimizerSpec
    init: InitSpec = Field(default_factory=InitSpec)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: Optional[str] = Field(default=None, description="Output directory")


class RunRow(BaseModel):
    """Per-iteration metrics."""
    k: int
    F: float
    residual: float
    x_norm: float
    momentum_err: Optional[float] = None
    wall_ms: float = 0.0


class RunSummary(BaseModel):
    """Summary recomputable from the rows."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    min_residual: float = Field(..., description="min over k=1..K of the stationarity residual")
    final_residual: float
    final_F: float
    F_star: Optional[float] = None
    final_gap: Optional[float] = None
    max_x_norm: float
    max_step_norm: float
    mean_noise_euclid: float = 0.0
    mean_noise_dual: float = 0.0
    bounds: Dict[str, float] = Field(default_factory=dict)


class RunRecord(BaseModel):
    """Trajectory of one seeded run."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    config: OptimizerConfig
    problem: Dict[str, object] = Field(default_factory=dict)
    seed: int
    rows: List[RunRow] = Field(default_factory=list)
    summary: RunSummary

    def trajectory(self) -> List[Tuple[int, float, float, float, Optional[float]]]:
        """Rows without wall-time, for reproducibility comparisons."""
        return [(r.k, r.F, r.residual, r.x_norm, r.momentum_err) for r in self.rows]


class BoundReport(BaseModel):
    """Outcome of one inequality check."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    theorem: str = Field(..., description="Theorem or lemma id")
    lhs: float = Field(..., description="Empirical left-hand side")
    rhs: float = Field(..., description="Theoretical right-hand side")
    holds: bool
    margin: float = Field(..., description="rhs - lhs")
    n_records: int = 1
    hypotheses_ok: bool = True
    detail: str = ""


class ProxCheck(BaseModel):
    """Result of the trust-region prox inequality evaluation."""
    holds: bool
    slack: float


class CheckResult(BaseModel):
    """One line of a verify table."""
    suite: str
    name: str
    passed: bool
    detail: str = ""


class BoundConstants(BaseModel):
    """Problem and run constants entering the theorem right-hand sides."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    L: Optional[float] = Field(default=None, description="Gradient Lipschitz constant in the run geometry")
    H: Optional[float] = Field(default=None, description="Hessian Lipschitz constant in the run geometry")
    sigma: float = Field(default=0.0, ge=0.0, description="Euclidean noise level")
    rho: float = Field(default=1.0, gt=0.0, description="Norm equivalence constant")
    delta0: Optional[float] = Field(default=None, description="F(x0) - inf F (or F(x0) - F* for star-convex checks)")
    D: Optional[float] = Field(default=None, description="Diameter of dom R under clipping")
    F_star: Optional[float] = None
    x0_norm: float = 0.0
    x_star_norm: Optional[float] = None
    star_convex: bool = False


class ComparisonRow(BaseModel):
    """Seed-aggregated outcome of one reference update at one (sigma, eta) grid point."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    algorithm: Variant
    sigma: float
    eta: float
    alpha: float
    K: int
    seeds: List[int] = Field(..., description="Noise seeds, in the order of the per-seed fields")
    final_residuals: List[float] = Field(..., description="Per-seed final residual")
    mean_final_residual: float
    mean_min_residual: float
    momentum_err_trace: List[float] = Field(..., description="Seed-mean ||M_{k+1} - grad f(X_k)||_* per k")
    momentum_err_traces: List[List[float]] = Field(..., description="Per-seed momentum error per k")


class RunEntry(BaseModel):
    """One seeded run inside an experiment summary."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    seed: int
    csv: str = Field(..., description="CSV file name, relative to the summary")
    summary: RunSummary


class ExperimentSummary(BaseModel):
    """Content of summary.json written by `main.py run`."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str
    problem: Dict[str, object] = Field(default_factory=dict)
    config: OptimizerConfig
    schedule: Optional[Schedule] = None
    runs: List[RunEntry] = Field(default_factory=list)
    mean_min_residual: float
    mean_final_F: float


class SweepRow(BaseModel):
    """Seed-aggregated outcome of one sweep value."""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    param: SweepParam
    value: float
    variant: Variant
    n_runs: int
    mean_min_residual: float
    mean_final_residual: float
    mean_final_F: float
    mean_final_gap: Optional[float] = None
