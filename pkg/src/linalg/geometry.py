"""
Norm geometries: primal norm, dual norm, linear maximization oracle and the
norm-equivalence constant rho, including matrix orthogonalization.
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from ..models import GeometryKind, OrthConfig, OrthMethod, Shape
from .vspace import IncompatibleShapesError, ParamPoint


logger = logging.getLogger(__name__)

# Muon's quintic coefficients: fast, but the singular values only land in a band around 1.
MUON_NS_COEFFS = (3.4445, -4.7750, 2.0315)
# p(s) = (15 s - 10 s^3 + 3 s^5) / 8 converges to 1 on (0, 1].
CONVERGENT_NS_COEFFS = (15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0)


class GeometryError(ValueError):
    """Raised for invalid geometry / shape combinations."""


def rho_constant(kind: GeometryKind, shape: Shape) -> float:
    """
    Smallest rho with ||x||_* <= rho * ||x||_2.

    Euclidean is self-dual (1); the l1 dual of the infinity norm gives sqrt(d);
    the nuclear dual of the spectral norm gives sqrt(min(m, n)).
    """
    if kind == GeometryKind.EUCLIDEAN:
        return 1.0
    if kind == GeometryKind.INFINITY:
        return math.sqrt(shape.size)
    if kind == GeometryKind.SPECTRAL:
        if not shape.is_matrix:
            raise GeometryError("spectral geometry requires a matrix shape")
        return math.sqrt(min(shape.dims))
    raise GeometryError(f"unknown geometry kind: {kind}")


class NormGeometry(BaseModel):
    """A norm triple (primal, dual, LMO) bound to a point shape."""
    model_config = ConfigDict(frozen=True)

    kind: GeometryKind
    shape: Shape

    @model_validator(mode="after")
    def _check_shape(self) -> "NormGeometry":
        if self.kind == GeometryKind.SPECTRAL and not self.shape.is_matrix:
            raise GeometryError("spectral geometry requires a matrix shape")
        return self

    @classmethod
    def for_point(cls, kind: GeometryKind, x: ParamPoint) -> "NormGeometry":
        return cls(kind=kind, shape=x.shape)

    @property
    def rho(self) -> float:
        return rho_constant(self.kind, self.shape)

    def check(self, x: ParamPoint) -> None:
        if self.kind == GeometryKind.SPECTRAL and not x.shape.is_matrix:
            raise GeometryError("spectral norm is undefined for vector points")
        if x.shape != self.shape:
            raise IncompatibleShapesError(self.shape, x.shape)


def singular_values(x: ParamPoint) -> np.ndarray:
    return np.linalg.svd(x.as_array(), compute_uv=False)


def primal_norm(g: NormGeometry, x: ParamPoint) -> float:
    """Euclidean -> l2, Infinity -> max |x_i|, Spectral -> largest singular value."""
    g.check(x)
    if g.kind == GeometryKind.EUCLIDEAN:
        return float(np.linalg.norm(x.data))
    if g.kind == GeometryKind.INFINITY:
        return float(np.max(np.abs(x.data))) if x.data.size else 0.0
    return float(singular_values(x)[0])


def dual_norm(g: NormGeometry, x: ParamPoint) -> float:
    """Euclidean -> l2, Infinity -> l1, Spectral -> nuclear norm."""
    g.check(x)
    if g.kind == GeometryKind.EUCLIDEAN:
        return float(np.linalg.norm(x.data))
    if g.kind == GeometryKind.INFINITY:
        return float(np.sum(np.abs(x.data)))
    return float(np.sum(singular_values(x)))


def _orth_svd(G: np.ndarray, rank_tol: float) -> np.ndarray:
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(G)
    keep = s > rank_tol * s[0]
    return U[:, keep] @ Vt[keep, :]


def _orth_newton_schulz(G: np.ndarray, steps: int, coeffs) -> np.ndarray:
    norm = np.linalg.norm(G)
    if norm == 0.0:
        return np.zeros_like(G)
    a, b, c = coeffs
    transposed = G.shape[0] > G.shape[1]
    X = G.T / norm if transposed else G / norm
    for _ in range(steps):
        A = X @ X.T
        B = b * A + c * A @ A
        X = a * X + B @ X
    return X.T if transposed else X


def orth(G: ParamPoint, cfg: OrthConfig) -> ParamPoint:
    """
    Orthogonalize a matrix: (G G^T)^{+1/2} G.

    ExactSVD returns U 1[s > rank_tol * s_max] V^T from the thin SVD. NewtonSchulz runs
    the quintic iteration on G / ||G||_F with the configured coefficients.
    """
    if not G.shape.is_matrix:
        raise GeometryError("orth requires a matrix point")
    array = G.as_array()
    if cfg.method == OrthMethod.EXACT_SVD:
        result = _orth_svd(array, cfg.rank_tol)
    else:
        result = _orth_newton_schulz(array, cfg.ns_steps, cfg.ns_coeffs)
    return ParamPoint(result, G.shape)


def lmo(g: NormGeometry, m: ParamPoint, cfg: OrthConfig) -> ParamPoint:
    """
    Linear maximization oracle: u with ||u|| <= 1 maximizing <m, u>.

    Euclidean -> m / ||m||_2 (zero for m = 0), Infinity -> sign(m) with sign(0) = 0,
    Spectral -> orth(m).
    """
    g.check(m)
    if g.kind == GeometryKind.EUCLIDEAN:
        norm = float(np.linalg.norm(m.data))
        if norm == 0.0:
            return ParamPoint.zeros(m.shape)
        return ParamPoint(m.data / norm, m.shape)
    if g.kind == GeometryKind.INFINITY:
        return ParamPoint(np.sign(m.data), m.shape)
    return orth(m, cfg)


def rho_witness(kind: GeometryKind, shape: Shape) -> ParamPoint:
    """
    Point attaining ||x||_* = rho * ||x||_2: the all-ones vector for the
    infinity norm, the identity-like matrix for the spectral norm.
    """
    if kind == GeometryKind.SPECTRAL:
        m, n = shape.dims
        return ParamPoint(np.eye(m, n), shape)
    return ParamPoint(np.ones(shape.size), shape)


def random_extreme_point(g: NormGeometry, rng: np.random.Generator) -> ParamPoint:
    """
    Random point on the boundary of the unit primal ball, drawn among its
    extreme points (unit sphere, cube vertices, matrices with unit singular values).
    """
    shape = g.shape
    if g.kind == GeometryKind.EUCLIDEAN:
        z = rng.standard_normal(shape.size)
        return ParamPoint(z / np.linalg.norm(z), shape)
    if g.kind == GeometryKind.INFINITY:
        return ParamPoint(rng.choice([-1.0, 1.0], size=shape.size), shape)
    m, n = shape.dims
    tall = m >= n
    Z = rng.standard_normal((m, n) if tall else (n, m))
    Q, R = np.linalg.qr(Z)
    Q = Q * np.sign(np.diag(R))
    return ParamPoint(Q if tall else Q.T, shape)
