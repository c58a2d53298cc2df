"""
Verification suites behind `main.py verify`.

Each suite returns CheckResult rows; theorem checks also keep their BoundReports
and the Muon/OSGDM comparison table. Everything is seeded and no wall-time enters
a result, so reruns produce identical reports.
"""
import itertools
import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg as sla

from ..config import settings
from ..models import (
    BoundReport, CheckResult, ComparisonRow, CorollaryId, GeometryKind, LossKind, OptimizerConfig,
    OrthConfig, OrthMethod, Regularizer, ScheduleInputs, Shape, TheoremId, Variant,
)
from ..linalg.geometry import (
    CONVERGENT_NS_COEFFS, MUON_NS_COEFFS, NormGeometry, dual_norm, lmo, orth, primal_norm,
    random_extreme_point, rho_witness, singular_values,
)
from ..linalg.trstep import (
    NoClosedFormError, TrustRegionSpec, prox_inequality_check, stationarity_residual, tr_step,
)
from ..linalg.vspace import ParamPoint, axpby, euclid_norm, inner
from ..optimizers.reference import MuonReference, mm_ref_step
from ..optimizers.schedules import schedule
from ..optimizers.trust_region import build_optimizer
from ..problems.base_problem import estimate_H, estimate_L, gradient_check, noisy_oracle
from ..problems.matrix_layer import make_matrix_layer
from ..problems.quadratic import make_quadratic
from ..utils import format_float
from .bounds import (
    check_bound, constants_for, descent_check, iterate_bound_check, momentum_error_check, prox_check_run,
)
from .comparison import muon_vs_osgdm
from .runner import run, run_many


logger = logging.getLogger(__name__)

SUITES = ("geometry", "trstep", "lemmas", "theorems")
EXACT = OrthConfig()


class SuiteOutcome(BaseModel):
    """Results of one or more verify suites."""
    checks: List[CheckResult] = Field(default_factory=list)
    reports: List[BoundReport] = Field(default_factory=list)
    comparison: List[ComparisonRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def extend(self, other: "SuiteOutcome") -> None:
        self.checks.extend(other.checks)
        self.reports.extend(other.reports)
        self.comparison.extend(other.comparison)


def _seeds() -> List[int]:
    return list(range(settings.stochastic_seeds))


def _from_report(suite: str, name: str, report: BoundReport) -> CheckResult:
    detail = f"lhs={format_float(report.lhs)} rhs={format_float(report.rhs)} margin={format_float(report.margin)}"
    if report.detail:
        detail += f" ({report.detail})"
    return CheckResult(suite=suite, name=name, passed=report.holds, detail=detail)


def _guarded(suite: str, name: str, check: Callable[[], CheckResult]) -> CheckResult:
    try:
        return check()
    except Exception as e:
        logger.error(f"{suite}/{name} raised: {e}")
        return CheckResult(suite=suite, name=name, passed=False, detail=f"error: {e}")


def _well_conditioned(rng: np.random.Generator, m: int, n: int, low: float = 0.5, high: float = 2.0) -> np.ndarray:
    r = min(m, n)
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return (U * rng.uniform(low, high, r)) @ V.T


def _extreme_points(geometry: NormGeometry, count: int, rng: np.random.Generator) -> List[ParamPoint]:
    """Extreme points of the unit primal ball: all cube vertices, or `count` random samples."""
    if geometry.kind == GeometryKind.INFINITY:
        vertices = itertools.product((-1.0, 1.0), repeat=geometry.shape.size)
        return [ParamPoint(np.array(v), geometry.shape) for v in vertices]
    return [random_extreme_point(geometry, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def _geometries() -> List[NormGeometry]:
    return [
        NormGeometry(kind=GeometryKind.EUCLIDEAN, shape=Shape.vector(3)),
        NormGeometry(kind=GeometryKind.INFINITY, shape=Shape.vector(3)),
        NormGeometry(kind=GeometryKind.SPECTRAL, shape=Shape.matrix(2, 2)),
    ]


def geometry_suite() -> SuiteOutcome:
    suite = "geometry"
    rng = np.random.default_rng(2024)
    checks: List[CheckResult] = []

    def orth_properties() -> CheckResult:
        matrices = [rng.standard_normal(dims) for dims in ((3, 3), (4, 2), (2, 5))]
        u, v, w, z = (rng.standard_normal(3) for _ in range(4))
        matrices.append(np.outer(u, v) + np.outer(w, z))
        idem, unit = 0.0, 0.0
        for array in matrices:
            O = orth(ParamPoint(array), EXACT)
            idem = max(idem, float(np.max(np.abs(orth(O, EXACT).data - O.data))))
            unit = max(unit, abs(float(singular_values(O)[0]) - 1.0))
        zero_ok = orth(ParamPoint(np.zeros((2, 3))), EXACT) == ParamPoint(np.zeros((2, 3)))
        passed = idem <= 1e-10 and unit <= 1e-10 and zero_ok
        return CheckResult(suite=suite, name="orth_idempotent_unit_norm", passed=passed,
                           detail=f"idempotence gap={format_float(idem)} norm gap={format_float(unit)}")

    def orth_polar() -> CheckResult:
        gap = 0.0
        for _ in range(5):
            G = rng.standard_normal((3, 3))
            polar_factor, _ = sla.polar(G)
            gap = max(gap, float(np.max(np.abs(orth(ParamPoint(G), EXACT).as_array() - polar_factor))))
        return CheckResult(suite=suite, name="orth_matches_polar_factor", passed=gap <= 1e-10,
                           detail=f"max gap={format_float(gap)}")

    def lmo_optimality(geometry: NormGeometry) -> CheckResult:
        worst_search, worst_dual, worst_norm = -math.inf, 0.0, 0.0
        for _ in range(10):
            m = ParamPoint(rng.standard_normal(geometry.shape.size), geometry.shape)
            u = lmo(geometry, m, EXACT)
            value = inner(m, u)
            best = max(inner(m, p) for p in _extreme_points(geometry, 1000, rng))
            worst_search = max(worst_search, best - value)
            worst_dual = max(worst_dual, abs(value - dual_norm(geometry, m)))
            worst_norm = max(worst_norm, primal_norm(geometry, u) - 1.0)
        passed = worst_search <= 1e-12 and worst_dual <= 1e-10 and worst_norm <= 1e-12
        return CheckResult(suite=suite, name=f"lmo_optimality_{geometry.kind.value}", passed=passed,
                           detail=f"search excess={format_float(worst_search)} dual gap={format_float(worst_dual)}")

    def cauchy_schwarz(geometry: NormGeometry) -> CheckResult:
        worst = -math.inf
        for _ in range(1000):
            x = ParamPoint(rng.standard_normal(geometry.shape.size), geometry.shape)
            y = ParamPoint(rng.standard_normal(geometry.shape.size), geometry.shape)
            worst = max(worst, abs(inner(x, y)) - primal_norm(geometry, x) * dual_norm(geometry, y))
        return CheckResult(suite=suite, name=f"cauchy_schwarz_{geometry.kind.value}", passed=worst <= 1e-12,
                           detail=f"max excess={format_float(worst)}")

    def rho_tightness(geometry: NormGeometry) -> CheckResult:
        w = rho_witness(geometry.kind, geometry.shape)
        tight = abs(dual_norm(geometry, w) - geometry.rho * euclid_norm(w)) <= 1e-12 * geometry.rho * euclid_norm(w)
        worst = -math.inf
        for _ in range(1000):
            x = ParamPoint(rng.standard_normal(geometry.shape.size), geometry.shape)
            worst = max(worst, dual_norm(geometry, x) - geometry.rho * euclid_norm(x) * (1.0 + 1e-12))
        return CheckResult(suite=suite, name=f"rho_witness_{geometry.kind.value}_{geometry.shape}",
                           passed=tight and worst <= 0.0,
                           detail=f"rho={format_float(geometry.rho)} witness tight={tight}")

    def newton_schulz_accuracy() -> CheckResult:
        worst, worst_five, monotone = 0.0, 0.0, True
        for dims in ((4, 4), (3, 5)):
            G = ParamPoint(_well_conditioned(rng, *dims))
            exact = orth(G, EXACT)
            errors = []
            for steps in range(1, 13):
                cfg = OrthConfig(method=OrthMethod.NEWTON_SCHULZ, ns_steps=steps, ns_coeffs=CONVERGENT_NS_COEFFS)
                diff = ParamPoint(orth(G, cfg).as_array() - exact.as_array())
                errors.append(float(singular_values(diff)[0]))
                if steps == 5:
                    worst_five = max(worst_five, euclid_norm(diff))
            monotone = monotone and all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
            worst = max(worst, errors[-1])
        return CheckResult(suite=suite, name="newton_schulz_convergent_accuracy",
                           passed=worst <= 1e-2 and worst_five <= 1e-2 and monotone,
                           detail=f"frobenius error after 5 steps={format_float(worst_five)} "
                                  f"spectral error after 12 steps={format_float(worst)} monotone={monotone}")

    def newton_schulz_band() -> CheckResult:
        low, high = math.inf, -math.inf
        cfg = OrthConfig(method=OrthMethod.NEWTON_SCHULZ, ns_steps=5, ns_coeffs=MUON_NS_COEFFS)
        for dims in ((4, 4), (3, 5), (5, 2)):
            s = singular_values(orth(ParamPoint(_well_conditioned(rng, *dims)), cfg))
            low, high = min(low, float(s.min())), max(high, float(s.max()))
        return CheckResult(suite=suite, name="newton_schulz_muon_band", passed=0.5 < low and high < 1.5,
                           detail=f"singular values in [{format_float(low)}, {format_float(high)}]")

    checks.append(_guarded(suite, "orth_idempotent_unit_norm", orth_properties))
    checks.append(_guarded(suite, "orth_matches_polar_factor", orth_polar))
    for geometry in _geometries():
        checks.append(_guarded(suite, f"lmo_optimality_{geometry.kind.value}", lambda g=geometry: lmo_optimality(g)))
        checks.append(_guarded(suite, f"cauchy_schwarz_{geometry.kind.value}", lambda g=geometry: cauchy_schwarz(g)))
    for geometry in _geometries() + [
        NormGeometry(kind=GeometryKind.INFINITY, shape=Shape.vector(4)),
        NormGeometry(kind=GeometryKind.SPECTRAL, shape=Shape.matrix(2, 3)),
    ]:
        checks.append(_guarded(suite, f"rho_witness_{geometry.kind.value}", lambda g=geometry: rho_tightness(g)))
    checks.append(_guarded(suite, "newton_schulz_convergent_accuracy", newton_schulz_accuracy))
    checks.append(_guarded(suite, "newton_schulz_muon_band", newton_schulz_band))
    return SuiteOutcome(checks=checks)


# ---------------------------------------------------------------------------
# trust-region step
# ---------------------------------------------------------------------------

def brute_force_step_value(spec: TrustRegionSpec, x: ParamPoint, m: ParamPoint,
                           rng: np.random.Generator, samples: int = 20000) -> float:
    """
    min <m, y> over the trust region, by enumeration.

    The linear objective is minimized at an extreme point of the (possibly clipped)
    trust region, so the search covers sampled sphere points, all cube vertices,
    a fine grid of 2 x 2 orthogonal matrices or a corner-containing box grid.
    """
    center = (1.0 - spec.beta) * x.data
    if spec.regularizer.radius is not None:
        D = spec.regularizer.radius
        axes = [np.linspace(max(c - spec.eta, -D), min(c + spec.eta, D), 41) for c in center]
        grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1)
        return float(np.min(m.data @ grid))
    geometry = spec.geometry
    if geometry.kind == GeometryKind.SPECTRAL and geometry.shape.dims == (2, 2):
        theta = np.linspace(0.0, 2.0 * np.pi, 4000, endpoint=False)
        c, s = np.cos(theta), np.sin(theta)
        rotations = np.stack([c, -s, s, c], axis=1)
        reflections = np.stack([c, s, s, -c], axis=1)
        directions = np.vstack([rotations, reflections])
    elif geometry.kind == GeometryKind.EUCLIDEAN:
        Z = rng.standard_normal((samples, geometry.shape.size))
        directions = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    else:
        directions = np.array([p.data for p in _extreme_points(geometry, samples, rng)])
    return float(np.min(m.data @ (center[:, None] + spec.eta * directions.T)))


def brute_force_residual(x: np.ndarray, grad: np.ndarray, D: float, grid: int = 30001) -> float:
    """min ||grad + v||_1 over the normal cone of [-D, D]^d at x, coordinate by coordinate on a grid."""
    total = 0.0
    for xi, gi in zip(x, grad):
        reach = 3.0 * abs(gi) + 1.0
        if xi >= D:
            candidates = np.linspace(0.0, reach, grid)
        elif xi <= -D:
            candidates = np.linspace(-reach, 0.0, grid)
        else:
            candidates = np.zeros(1)
        total += float(np.min(np.abs(gi + candidates)))
    return total


def trstep_suite() -> SuiteOutcome:
    suite = "trstep"
    rng = np.random.default_rng(2025)
    checks: List[CheckResult] = []

    def closed_forms() -> List[CheckResult]:
        results = []
        X = ParamPoint(rng.standard_normal((3, 4)))
        G = ParamPoint(rng.standard_normal((3, 4)))
        spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.SPECTRAL, X), eta=0.1)
        gap = float(np.max(np.abs(tr_step(spec, X, G, EXACT).data - (X.data - 0.1 * orth(G, EXACT).data))))
        results.append(CheckResult(suite=suite, name="spectral_step_is_orthogonalized_gradient",
                                   passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        x = ParamPoint(rng.standard_normal(5))
        g = ParamPoint(rng.standard_normal(5))
        spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.EUCLIDEAN, x), eta=0.3)
        expected = x.data - 0.3 * g.data / np.linalg.norm(g.data)
        gap = float(np.max(np.abs(tr_step(spec, x, g, EXACT).data - expected)))
        results.append(CheckResult(suite=suite, name="euclidean_step_is_normalized_gradient",
                                   passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.INFINITY, x), eta=0.3)
        gap = float(np.max(np.abs(tr_step(spec, x, g, EXACT).data - (x.data - 0.3 * np.sign(g.data)))))
        results.append(CheckResult(suite=suite, name="infinity_step_is_sign_step",
                                   passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.EUCLIDEAN, x), eta=0.3, beta=0.2)
        expected = 0.8 * x.data - 0.3 * g.data / np.linalg.norm(g.data)
        gap = float(np.max(np.abs(tr_step(spec, x, g, EXACT).data - expected)))
        results.append(CheckResult(suite=suite, name="weight_decay_shifts_center",
                                   passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        # The steepest-descent step matches the trust-region step once theta absorbs ||g||_*.
        for kind, point, direction in ((GeometryKind.INFINITY, x, g), (GeometryKind.SPECTRAL, X, G)):
            geometry = NormGeometry.for_point(kind, point)
            spec = TrustRegionSpec(geometry=geometry, eta=0.3)
            theta = 0.3 / dual_norm(geometry, direction)
            mm = mm_ref_step(point, direction, theta, geometry, EXACT)
            gap = float(np.max(np.abs(tr_step(spec, point, direction, EXACT).data - mm.data)))
            results.append(CheckResult(suite=suite, name=f"steepest_descent_rescaled_{kind.value}",
                                       passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        return results

    def brute_force(spec_factory: Callable[[], TrustRegionSpec], shape: Shape, name: str) -> CheckResult:
        worst, feasible = 0.0, True
        for _ in range(5):
            spec = spec_factory()
            D = spec.regularizer.radius
            raw = rng.standard_normal(shape.size)
            x = ParamPoint(np.clip(raw, -D, D) if D is not None else raw, shape)
            m = ParamPoint(rng.standard_normal(shape.size), shape)
            x_plus = tr_step(spec, x, m, EXACT)
            center = ParamPoint((1.0 - spec.beta) * x.data, shape)
            feasible = feasible and primal_norm(spec.geometry, axpby(1.0, x_plus, -1.0, center)) <= spec.eta * (1 + 1e-12)
            if D is not None:
                feasible = feasible and float(np.max(np.abs(x_plus.data))) <= D
            brute = brute_force_step_value(spec, x, m, rng)
            worst = max(worst, abs(inner(m, x_plus) - brute))
        return CheckResult(suite=suite, name=f"brute_force_{name}", passed=worst <= 1e-3 and feasible,
                           detail=f"objective gap={format_float(worst)} feasible={feasible}")

    def residual_brute_force() -> CheckResult:
        worst = 0.0
        D = 1.0
        for trial in range(10):
            d = 1 + trial % 3
            x = rng.uniform(-D, D, d)
            active = rng.uniform(size=d) < 0.6
            x = np.where(active, np.sign(rng.standard_normal(d)) * D, x)
            grad = rng.standard_normal(d) * 2.0
            point = ParamPoint(x)
            spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.INFINITY, point),
                                   regularizer=Regularizer.clip_ball(D), eta=0.1)
            exact = stationarity_residual(spec, point, ParamPoint(grad))
            worst = max(worst, abs(exact - brute_force_residual(x, grad, D)))
        return CheckResult(suite=suite, name="stationarity_residual_normal_cone", passed=worst <= 1e-3,
                           detail=f"max gap={format_float(worst)}")

    def prox_inequality() -> CheckResult:
        worst = math.inf
        holds = True
        cases = [
            (GeometryKind.EUCLIDEAN, Shape.vector(4), Regularizer.none(), 0.0),
            (GeometryKind.INFINITY, Shape.vector(4), Regularizer.none(), 0.1),
            (GeometryKind.SPECTRAL, Shape.matrix(3, 2), Regularizer.none(), 0.0),
            (GeometryKind.INFINITY, Shape.vector(3), Regularizer.clip_ball(0.5), 0.0),
            (GeometryKind.INFINITY, Shape.vector(3), Regularizer.clip_ball(0.5), 0.2),
        ]
        for kind, shape, reg, beta in cases:
            spec = TrustRegionSpec(geometry=NormGeometry(kind=kind, shape=shape), regularizer=reg, eta=0.3, beta=beta)
            for _ in range(20):
                raw = rng.standard_normal(shape.size)
                if reg.radius is not None:
                    raw = np.clip(raw, -reg.radius, reg.radius)
                x = ParamPoint(raw, shape)
                m = ParamPoint(rng.standard_normal(shape.size), shape)
                check = prox_inequality_check(spec, x, tr_step(spec, x, m, EXACT), m)
                holds = holds and check.holds
                worst = min(worst, check.slack)
        return CheckResult(suite=suite, name="prox_inequality", passed=holds,
                           detail=f"min slack={format_float(worst)}")

    def unsupported_rejected() -> CheckResult:
        x = ParamPoint(np.zeros(3))
        spec = TrustRegionSpec(geometry=NormGeometry.for_point(GeometryKind.EUCLIDEAN, x),
                               regularizer=Regularizer.clip_ball(1.0), eta=0.1)
        try:
            tr_step(spec, x, ParamPoint(np.ones(3)), EXACT)
        except NoClosedFormError:
            return CheckResult(suite=suite, name="unsupported_pair_rejected", passed=True)
        return CheckResult(suite=suite, name="unsupported_pair_rejected", passed=False,
                           detail="clip under the Euclidean geometry was accepted")

    def reductions() -> List[CheckResult]:
        # Special cases of the momentum variant against directly coded updates.
        results = []
        alpha, eta, steps = 0.3, 0.05, 5
        for kind, shape in ((GeometryKind.EUCLIDEAN, Shape.vector(4)), (GeometryKind.INFINITY, Shape.vector(4)),
                            (GeometryKind.SPECTRAL, Shape.matrix(3, 3))):
            config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=kind, eta=eta, alpha=alpha, K=steps)
            optimizer = build_optimizer(config, shape)
            grads = [rng.standard_normal(shape.size) for _ in range(steps + 1)]
            x0 = ParamPoint(rng.standard_normal(shape.size), shape)
            state = optimizer.init(x0, ParamPoint(grads[0], shape))
            if kind == GeometryKind.SPECTRAL:
                ref = MuonReference(config.model_copy(update={"variant": Variant.MUON_REF}), shape)
                ref_state = ref.init(x0, ParamPoint(grads[0], shape))
                for g in grads[1:]:
                    state = optimizer.step(state, ParamPoint(g, shape))
                    ref_state = ref.step(ref_state, ParamPoint(g, shape))
                gap = float(np.max(np.abs(state.x.data - ref_state.x.data)))
                name = "momentum_spectral_equals_muon"
            else:
                x, m = x0.data.copy(), grads[0].copy()
                for g in grads[1:]:
                    state = optimizer.step(state, ParamPoint(g, shape))
                    m = (1 - alpha) * m + alpha * g
                    direction = m / np.linalg.norm(m) if kind == GeometryKind.EUCLIDEAN else np.sign(m)
                    x = x - eta * direction
                gap = float(np.max(np.abs(state.x.data - x)))
                name = "momentum_euclidean_is_normalized_sgdm" if kind == GeometryKind.EUCLIDEAN \
                    else "momentum_infinity_is_signsgdm"
            results.append(CheckResult(suite=suite, name=name, passed=gap <= 1e-12, detail=f"gap={format_float(gap)}"))
        return results

    for factory in (closed_forms, reductions):
        try:
            checks.extend(factory())
        except Exception as e:
            logger.error(f"{suite}/{factory.__name__} raised: {e}")
            checks.append(CheckResult(suite=suite, name=factory.__name__, passed=False, detail=f"error: {e}"))
    brute_cases = [
        ("euclidean", Shape.vector(3), lambda: TrustRegionSpec(
            geometry=NormGeometry(kind=GeometryKind.EUCLIDEAN, shape=Shape.vector(3)), eta=0.5)),
        ("euclidean_decay", Shape.vector(2), lambda: TrustRegionSpec(
            geometry=NormGeometry(kind=GeometryKind.EUCLIDEAN, shape=Shape.vector(2)), eta=0.5, beta=0.3)),
        ("infinity", Shape.vector(3), lambda: TrustRegionSpec(
            geometry=NormGeometry(kind=GeometryKind.INFINITY, shape=Shape.vector(3)), eta=0.5)),
        ("spectral", Shape.matrix(2, 2), lambda: TrustRegionSpec(
            geometry=NormGeometry(kind=GeometryKind.SPECTRAL, shape=Shape.matrix(2, 2)), eta=0.5)),
        ("clip_box", Shape.vector(3), lambda: TrustRegionSpec(
            geometry=NormGeometry(kind=GeometryKind.INFINITY, shape=Shape.vector(3)),
            regularizer=Regularizer.clip_ball(1.0), eta=0.3, beta=0.1)),
    ]
    for name, shape, factory in brute_cases:
        checks.append(_guarded(suite, f"brute_force_{name}",
                               lambda f=factory, s=shape, n=name: brute_force(f, s, n)))
    checks.append(_guarded(suite, "stationarity_residual_normal_cone", residual_brute_force))
    checks.append(_guarded(suite, "prox_inequality", prox_inequality))
    checks.append(_guarded(suite, "unsupported_pair_rejected", unsupported_rejected))
    return SuiteOutcome(checks=checks)


# ---------------------------------------------------------------------------
# canned problems
# ---------------------------------------------------------------------------

CLIP_X_STAR = np.array([0.5, -0.3, 0.2, 0.1])


def _logistic_layer(sigma: float = 0.0):
    return make_matrix_layer(4, 4, 16, LossKind.LOGISTIC, seed=0, sigma=sigma)


def _star_convex_quadratic(sigma: float = 0.0, x_star_scale: float = 1.0):
    return make_quadratic(5, 5.0, seed=1, sigma=sigma, x_star_scale=x_star_scale)


def _clip_quadratic(sigma: float = 0.0):
    return make_quadratic(4, 4.0, seed=2, sigma=sigma, x_star=CLIP_X_STAR)


def _schedule_inputs(problem, geometry: GeometryKind, x0: ParamPoint, eps: float,
                     D: Optional[float] = None) -> ScheduleInputs:
    norms = NormGeometry(kind=geometry, shape=problem.shape)
    return ScheduleInputs(
        eps=eps,
        L=problem.constants.L[geometry],
        H=problem.constants.H.get(geometry),
        sigma=problem.sigma,
        rho=norms.rho,
        delta0=problem.f(x0) - problem.constants.inf_F,
        D=D,
    )


def _records(config: OptimizerConfig, problem, x0: ParamPoint, jobs: Optional[int], stochastic: bool = True):
    seeds = _seeds() if stochastic else [0]
    return run_many(config, problem, seeds, x0, jobs=jobs, record_wall_time=False,
                    desc=f"{config.variant.value}")


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------

def lemmas_suite(jobs: Optional[int] = None) -> SuiteOutcome:
    suite = "lemmas"
    outcome = SuiteOutcome()

    def add(name: str, report: BoundReport) -> None:
        outcome.reports.append(report)
        outcome.checks.append(_from_report(suite, name, report))

    def guarded(name: str, body: Callable[[], None]) -> None:
        try:
            body()
        except Exception as e:
            logger.error(f"{suite}/{name} raised: {e}")
            outcome.checks.append(CheckResult(suite=suite, name=name, passed=False, detail=f"error: {e}"))

    def momentum_family() -> None:
        layer = _logistic_layer(sigma=1.0)
        x0 = ParamPoint.zeros(layer.shape)
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.SPECTRAL, eta=0.01, alpha=0.1, K=200)
        add("momentum_error_envelope", momentum_error_check(_records(config, layer, x0, jobs),
                                                            constants_for(layer, config, x0)))

        quiet = layer.with_sigma(0.0)
        record = run(config, quiet, 0, x0, record_wall_time=False)
        constants = constants_for(quiet, config, x0)
        add("momentum_error_noiseless", momentum_error_check([record], constants))
        add("descent_momentum_noiseless", descent_check(record, constants))

        extrapolation = OptimizerConfig(variant=Variant.EXTRAPOLATION, geometry=GeometryKind.SPECTRAL,
                                        eta=0.01, alpha=0.1, K=200)
        add("momentum_error_extrapolation", momentum_error_check(_records(extrapolation, layer, x0, jobs),
                                                                 constants_for(layer, extrapolation, x0)))

    def weight_decay_family() -> None:
        quadratic = _star_convex_quadratic(sigma=0.5, x_star_scale=0.5)
        x0 = ParamPoint.zeros(quadratic.shape)
        config = OptimizerConfig(variant=Variant.MOMENTUM_DECAY, geometry=GeometryKind.EUCLIDEAN,
                                 eta=0.05, alpha=0.1, beta=0.02, K=300)
        records = _records(config, quadratic, x0, jobs)
        constants = constants_for(quadratic, config, x0)
        add("momentum_error_weight_decay", momentum_error_check(records, constants))
        add("iterate_bound_momentum_decay", iterate_bound_check(records[0], constants))

        exact = quadratic.with_sigma(0.0)
        det = OptimizerConfig(variant=Variant.DET_TR_DECAY, geometry=GeometryKind.EUCLIDEAN,
                              eta=0.05, beta=0.02, K=300)
        record = run(det, exact, 0, x0, record_wall_time=False)
        add("iterate_bound_det_tr_decay", iterate_bound_check(record, constants_for(exact, det, x0)))

        det_tr = OptimizerConfig(variant=Variant.DET_TR, geometry=GeometryKind.EUCLIDEAN, eta=0.01, K=500)
        record = run(det_tr, exact, 0, x0, record_wall_time=False)
        add("descent_det_tr", descent_check(record, constants_for(exact, det_tr, x0)))

    def prox_runs() -> None:
        clipped = _clip_quadratic()
        config = OptimizerConfig(variant=Variant.DET_TR, geometry=GeometryKind.INFINITY,
                                 regularizer=Regularizer.clip_ball(1.0), eta=0.05, K=100)
        add("prox_inequality_clip_run", prox_check_run(config, clipped, 0))
        layer = _logistic_layer(sigma=1.0)
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.SPECTRAL, eta=0.01, alpha=0.1, K=50)
        add("prox_inequality_spectral_run", prox_check_run(config, layer, 0))

    def lipschitz_estimates() -> None:
        worst = 0.0
        sound = True
        for seed in range(10):
            layer = make_matrix_layer(4, 4, 16, LossKind.LOGISTIC, seed=seed)
            analytic = layer.constants.L[GeometryKind.SPECTRAL]
            estimate = estimate_L(layer, GeometryKind.SPECTRAL, trials=1000, rng=np.random.default_rng(seed))
            sound = sound and estimate <= analytic + 1e-9
            worst = max(worst, estimate / analytic)
        outcome.checks.append(CheckResult(suite=suite, name="lipschitz_estimate_below_analytic", passed=sound,
                                          detail=f"max estimate/analytic={format_float(worst)}"))

        quadratic = make_quadratic(2, 5.0, seed=3)
        estimates = {kind: estimate_L(quadratic, kind, trials=1000) for kind in (GeometryKind.EUCLIDEAN, GeometryKind.INFINITY)}
        sound = all(0.0 < estimates[k] <= quadratic.constants.L[k] + 1e-9 for k in estimates)
        outcome.checks.append(CheckResult(
            suite=suite, name="lipschitz_estimate_quadratic", passed=sound,
            detail=", ".join(f"{k.value}={format_float(v)}" for k, v in estimates.items()),
        ))

    def hessian_estimates() -> None:
        logistic = _logistic_layer()
        analytic = logistic.constants.H[GeometryKind.SPECTRAL]
        estimate = estimate_H(logistic, GeometryKind.SPECTRAL, trials=100, rng=np.random.default_rng(1))
        outcome.checks.append(CheckResult(
            suite=suite, name="hessian_estimate_logistic", passed=0.0 < estimate <= analytic + 1e-6,
            detail=f"estimate={format_float(estimate)} analytic={format_float(analytic)}",
        ))
        squared = make_matrix_layer(4, 4, 16, LossKind.QUADRATIC, seed=0)
        estimate = estimate_H(squared, GeometryKind.SPECTRAL, trials=100, rng=np.random.default_rng(2))
        outcome.checks.append(CheckResult(
            suite=suite, name="hessian_estimate_quadratic_loss", passed=estimate <= 1e-5,
            detail=f"estimate={format_float(estimate)}",
        ))

    def gradients() -> None:
        rng = np.random.default_rng(11)
        problems = {
            "quadratic": make_quadratic(10, 10.0, seed=0),
            "matrix_layer_logistic": _logistic_layer(),
            "matrix_layer_quadratic": make_matrix_layer(3, 4, 8, LossKind.QUADRATIC, seed=4),
        }
        for name, problem in problems.items():
            points = [ParamPoint(rng.standard_normal(problem.shape.size), problem.shape) for _ in range(10)]
            gap = gradient_check(problem, points)
            outcome.checks.append(CheckResult(suite=suite, name=f"gradient_fd_{name}", passed=gap <= 1e-5,
                                              detail=f"max relative gap={format_float(gap)}"))

    def star_convexity() -> None:
        rng = np.random.default_rng(12)
        problems = [_star_convex_quadratic(), make_matrix_layer(3, 4, 8, LossKind.QUADRATIC, seed=4)]
        worst = -math.inf
        for problem in problems:
            x_star = problem.constants.x_star
            f_star = problem.f(x_star)
            for _ in range(1000):
                x = ParamPoint(2.0 * rng.standard_normal(problem.shape.size), problem.shape)
                beta = rng.uniform()
                mixed = axpby(beta, x_star, 1.0 - beta, x)
                worst = max(worst, problem.f(mixed) - (beta * f_star + (1.0 - beta) * problem.f(x)))
        outcome.checks.append(CheckResult(suite=suite, name="star_convexity", passed=worst <= 1e-10,
                                          detail=f"max violation={format_float(worst)}"))

    def oracle_statistics() -> None:
        layer = _logistic_layer(sigma=1.0)
        rng = np.random.default_rng(13)
        x = ParamPoint(rng.standard_normal(layer.shape.size), layer.shape)
        exact = layer.grad(x).data
        draws = 10000
        samples = np.array([noisy_oracle(layer, 1.0, x, rng).data for _ in range(draws)]) - exact
        bias = float(np.max(np.abs(samples.mean(axis=0))))
        second = float(np.mean(np.sum(samples ** 2, axis=1)))
        passed = bias <= 3.0 / math.sqrt(draws) and 0.95 <= second <= 1.05
        outcome.checks.append(CheckResult(suite=suite, name="oracle_unbiased_bounded_variance", passed=passed,
                                          detail=f"max bias={format_float(bias)} E||noise||^2={format_float(second)}"))

    for name, body in (("momentum_family", momentum_family), ("weight_decay_family", weight_decay_family),
                       ("prox_runs", prox_runs), ("lipschitz_estimates", lipschitz_estimates),
                       ("hessian_estimates", hessian_estimates), ("gradients", gradients),
                       ("star_convexity", star_convexity), ("oracle_statistics", oracle_statistics)):
        guarded(name, body)
    return outcome


# ---------------------------------------------------------------------------
# theorems
# ---------------------------------------------------------------------------

def theorems_suite(jobs: Optional[int] = None) -> SuiteOutcome:
    suite = "theorems"
    outcome = SuiteOutcome()

    def add(name: str, report: BoundReport) -> None:
        outcome.reports.append(report)
        outcome.checks.append(_from_report(suite, name, report))

    def nonconvex_deterministic() -> None:
        quadratic = make_quadratic(10, 10.0, seed=0)
        layer = _logistic_layer()
        for name, problem, geometry in (("quadratic", quadratic, GeometryKind.EUCLIDEAN),
                                        ("matrix_layer", layer, GeometryKind.SPECTRAL)):
            x0 = ParamPoint.zeros(problem.shape)
            plan = schedule(CorollaryId.C1, _schedule_inputs(problem, geometry, x0, eps=0.1))
            config = OptimizerConfig(variant=Variant.DET_TR, geometry=geometry, eta=plan.eta, K=1000)
            record = run(config, problem, 0, x0, record_wall_time=False)
            constants = constants_for(problem, config, x0)
            add(f"T1_{name}", check_bound(TheoremId.T1, [record], constants))
            add(f"descent_{name}", descent_check(record, constants))

    def nonconvex_stochastic() -> None:
        layer = _logistic_layer(sigma=1.0)
        x0 = ParamPoint.zeros(layer.shape)
        plan = schedule(CorollaryId.C2, _schedule_inputs(layer, GeometryKind.SPECTRAL, x0, eps=0.5))
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.SPECTRAL,
                                 eta=plan.eta, alpha=plan.alpha, K=plan.K)
        add("T2_matrix_layer", check_bound(TheoremId.T2, _records(config, layer, x0, jobs),
                                           constants_for(layer, config, x0)))

        config = OptimizerConfig(variant=Variant.EXTRAPOLATION, geometry=GeometryKind.SPECTRAL,
                                 eta=0.01, alpha=0.1, K=300)
        add("T6_matrix_layer", check_bound(TheoremId.T6, _records(config, layer, x0, jobs),
                                           constants_for(layer, config, x0)))

    def weight_decay() -> None:
        quadratic = _star_convex_quadratic()
        x0 = ParamPoint.zeros(quadratic.shape)
        norms = NormGeometry(kind=GeometryKind.EUCLIDEAN, shape=quadratic.shape)
        D = max(primal_norm(norms, x0), primal_norm(norms, quadratic.constants.x_star))
        plan = schedule(CorollaryId.C4, _schedule_inputs(quadratic, GeometryKind.EUCLIDEAN, x0, eps=0.1, D=D))
        config = OptimizerConfig(variant=Variant.DET_TR_DECAY, geometry=GeometryKind.EUCLIDEAN,
                                 eta=plan.eta, beta=plan.beta, K=plan.K)
        record = run(config, quadratic, 0, x0, record_wall_time=False)
        constants = constants_for(quadratic, config, x0)
        add("T4_quadratic", check_bound(TheoremId.T4, [record], constants))
        add("iterate_bound_T4_run", iterate_bound_check(record, constants))

        noisy = _star_convex_quadratic(sigma=0.5, x_star_scale=0.5)
        for theorem, variant in ((TheoremId.T5, Variant.MOMENTUM_DECAY), (TheoremId.T7, Variant.EXTRAPOLATION)):
            config = OptimizerConfig(variant=variant, geometry=GeometryKind.EUCLIDEAN,
                                     eta=0.05, alpha=0.1, beta=0.02, K=300)
            add(f"{theorem.value}_quadratic", check_bound(theorem, _records(config, noisy, x0, jobs),
                                                          constants_for(noisy, config, x0)))

    def clipping() -> None:
        clipped = _clip_quadratic()
        x0 = ParamPoint.zeros(clipped.shape)
        regularizer = Regularizer.clip_ball(1.0)
        plan = schedule(CorollaryId.C8, _schedule_inputs(clipped, GeometryKind.INFINITY, x0, eps=0.1,
                                                         D=regularizer.diameter))
        config = OptimizerConfig(variant=Variant.DET_TR, geometry=GeometryKind.INFINITY,
                                 regularizer=regularizer, eta=plan.eta, K=plan.K)
        record = run(config, clipped, 0, x0, record_wall_time=False)
        add("T8_D_quadratic", check_bound(TheoremId.T8_D, [record], constants_for(clipped, config, x0)))

        noisy = _clip_quadratic(sigma=0.1)
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.INFINITY,
                                 regularizer=regularizer, eta=0.01, alpha=0.1, K=300)
        add("T9_D_quadratic", check_bound(TheoremId.T9_D, _records(config, noisy, x0, jobs),
                                          constants_for(noisy, config, x0)))

    def comparison() -> None:
        rows = muon_vs_osgdm(_logistic_layer(), sigmas=[0.0, 1.0], etas=[0.01, 0.05], seeds=_seeds(),
                             alpha=0.1, K=100, jobs=jobs)
        outcome.comparison.extend(rows)
        complete = len(rows) == 8 and all(
            math.isfinite(r.mean_final_residual)
            and all(math.isfinite(v) for v in r.momentum_err_trace)
            and len(r.momentum_err_traces) == len(r.seeds)
            and all(math.isfinite(v) for trace in r.momentum_err_traces for v in trace)
            for r in rows
        )
        outcome.checks.append(CheckResult(suite=suite, name="muon_vs_osgdm_table", passed=complete,
                                          detail=f"{len(rows)} rows"))

    for name, body in (("nonconvex_deterministic", nonconvex_deterministic),
                       ("nonconvex_stochastic", nonconvex_stochastic), ("weight_decay", weight_decay),
                       ("clipping", clipping), ("comparison", comparison)):
        try:
            body()
        except Exception as e:
            logger.error(f"{suite}/{name} raised: {e}")
            outcome.checks.append(CheckResult(suite=suite, name=name, passed=False, detail=f"error: {e}"))
    return outcome


def run_suite(name: str, jobs: Optional[int] = None) -> SuiteOutcome:
    """
    Run one verify suite, or all of them for name == "all".

    Args:
        name: geometry, trstep, lemmas, theorems or all
        jobs: Parallel runs for the run-based suites

    Returns:
        Combined outcome in suite order
    """
    runners: Dict[str, Callable[[], SuiteOutcome]] = {
        "geometry": geometry_suite,
        "trstep": trstep_suite,
        "lemmas": lambda: lemmas_suite(jobs),
        "theorems": lambda: theorems_suite(jobs),
    }
    if name != "all" and name not in runners:
        raise ValueError(f"unknown suite: {name}")
    outcome = SuiteOutcome()
    for suite in (SUITES if name == "all" else (name,)):
        logger.info(f"Running verify suite: {suite}")
        outcome.extend(runners[suite]())
    return outcome
