"""
Unit tests for the experiment runner, the bound checks and the Muon/OSGDM comparison.
"""
import math
import pytest
import sys
import os

import numpy as np
import polars as pl

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.models import (
    BoundConstants, CorollaryId, GeometryKind, InitSpec, LossKind, OptimizerConfig, OptimizerSpec,
    Regularizer, ScheduleRef, TheoremId, Variant,
)
from src.linalg.vspace import ParamPoint
from src.harness.bounds import (
    BoundCheckError, applicable_theorems, check_bound, constants_for, descent_check, iterate_bound_check,
    momentum_error_check, momentum_error_rhs, prox_check_run, theorem_rhs,
)
from src.harness.comparison import muon_vs_osgdm
from src.harness.runner import initial_point, resolve_optimizer, run, run_many
from src.harness.suites import geometry_suite, run_suite, trstep_suite
from src.problems.matrix_layer import make_matrix_layer
from src.problems.quadratic import make_quadratic
from src.reporting.records_io import write_comparison_csv


@pytest.fixture
def quadratic():
    return make_quadratic(5, 5.0, seed=1)


class TestTheoremBounds:
    """Test right-hand sides of the convergence bounds."""

    def test_t1_rhs(self):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.1, K=100)
        assert theorem_rhs(TheoremId.T1, config, BoundConstants(L=1.0, delta0=10.0)) == pytest.approx(1.15)

    def test_t4_rhs(self):
        config = OptimizerConfig(variant=Variant.DET_TR_DECAY, eta=0.05, beta=0.1, K=50)
        constants = BoundConstants(L=1.0, delta0=1.0, F_star=0.0)
        assert theorem_rhs(TheoremId.T4, config, constants) == pytest.approx(0.9 ** 50 + 0.1)

    def test_t2_noiseless_reduces(self):
        """Without noise the momentum bound keeps only the step-size terms."""
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.1, alpha=0.5, K=100)
        rhs = theorem_rhs(TheoremId.T2, config, BoundConstants(L=1.0, delta0=10.0, sigma=0.0))
        assert rhs == pytest.approx(1.0 + 0.35 + 0.4)

    def test_t8_uses_diameter(self):
        config = OptimizerConfig(variant=Variant.DET_TR, geometry=GeometryKind.INFINITY,
                                 regularizer=Regularizer.clip_ball(1.0), eta=0.1, K=10)
        constants = BoundConstants(L=1.0, delta0=1.0, F_star=0.0, D=2.0)
        expected = (2.0 / 2.1) ** 10 + 1.5 * 2.0 * 0.1
        assert theorem_rhs(TheoremId.T8_D, config, constants) == pytest.approx(expected)

    def test_missing_constant(self):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.1, K=100)
        with pytest.raises(BoundCheckError, match="delta0"):
            theorem_rhs(TheoremId.T1, config, BoundConstants(L=1.0))

    def test_momentum_error_rhs(self):
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.1, alpha=0.25, K=10)
        constants = BoundConstants(L=2.0, sigma=1.0, rho=1.0)
        expected = 0.75 ** 4 + 0.5 + 2.0 * 0.1 / 0.25
        assert momentum_error_rhs(config, constants, 3) == pytest.approx(expected)

    def test_applicable_theorems(self):
        assert applicable_theorems(OptimizerConfig(variant=Variant.DET_TR, eta=0.1, K=1)) == [TheoremId.T1]
        clipped = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.INFINITY,
                                  regularizer=Regularizer.clip_ball(1.0), eta=0.1, alpha=0.5, K=1)
        assert applicable_theorems(clipped) == [TheoremId.T2, TheoremId.T9_D]
        decay = OptimizerConfig(variant=Variant.EXTRAPOLATION, eta=0.1, alpha=0.5, beta=0.1, K=1)
        assert applicable_theorems(decay) == [TheoremId.T7]


class TestRunner:
    """Test seeded runs and their records."""

    def test_row_count(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=20)
        record = run(config, quadratic, seed=0)
        assert len(record.rows) == 21
        assert [r.k for r in record.rows] == list(range(21))
        assert record.rows[-1].momentum_err is None
        assert all(r.momentum_err is not None for r in record.rows[:-1])

    def test_summary(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=20)
        record = run(config, quadratic, seed=0)
        assert record.summary.min_residual == min(r.residual for r in record.rows[1:])
        assert record.summary.final_F == record.rows[-1].F
        assert record.summary.final_gap == pytest.approx(record.rows[-1].F)
        assert record.summary.max_step_norm <= 0.05 * (1 + 1e-12)
        assert "T1" in record.summary.bounds

    def test_reproducible(self, quadratic):
        """Same config and seed give identical trajectories; another seed does not."""
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.05, alpha=0.2, K=30)
        noisy = quadratic.with_sigma(0.5)
        a = run(config, noisy, seed=3, record_wall_time=False)
        b = run(config, noisy, seed=3, record_wall_time=False)
        c = run(config, noisy, seed=4, record_wall_time=False)
        assert a.trajectory() == b.trajectory()
        assert a.model_dump() == b.model_dump()
        assert a.trajectory() != c.trajectory()

    def test_wall_time_optional(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=5)
        assert all(r.wall_ms == 0.0 for r in run(config, quadratic, 0, record_wall_time=False).rows)

    def test_run_many_parallel_matches_serial(self, quadratic):
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.05, alpha=0.2, K=15)
        noisy = quadratic.with_sigma(1.0)
        serial = run_many(config, noisy, [0, 1, 2, 3], jobs=1, record_wall_time=False)
        parallel = run_many(config, noisy, [0, 1, 2, 3], jobs=4, record_wall_time=False)
        assert [r.seed for r in parallel] == [0, 1, 2, 3]
        assert [r.trajectory() for r in serial] == [r.trajectory() for r in parallel]

    def test_noise_statistics(self, quadratic):
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.05, alpha=0.2, K=200)
        record = run(config, quadratic.with_sigma(1.0), seed=0, record_wall_time=False)
        assert 0.5 < record.summary.mean_noise_euclid < 1.2
        assert record.summary.mean_noise_dual == pytest.approx(record.summary.mean_noise_euclid)

    def test_initial_point(self, quadratic):
        assert initial_point(InitSpec(), quadratic, Regularizer.none()) == ParamPoint.zeros(quadratic.shape)
        x0 = initial_point(InitSpec(kind="random", scale=5.0), quadratic, Regularizer.clip_ball(1.0), seed=3)
        assert np.max(np.abs(x0.data)) <= 1.0
        again = initial_point(InitSpec(kind="random", scale=5.0), quadratic, Regularizer.clip_ball(1.0), seed=3)
        assert x0 == again

    def test_resolve_schedule(self, quadratic):
        spec = OptimizerSpec(variant=Variant.DET_TR, schedule=ScheduleRef(corollary=CorollaryId.C1, eps=0.5))
        x0 = ParamPoint.zeros(quadratic.shape)
        config, plan = resolve_optimizer(spec, quadratic, x0)
        assert plan is not None
        L = quadratic.constants.L[GeometryKind.EUCLIDEAN]
        iterations = L * quadratic.f(x0) / 0.25
        assert config.eta == pytest.approx(0.5 / L)
        assert config.K == plan.K
        assert plan.K == max(1, math.ceil(iterations - 1e-9 * max(1.0, iterations)))

    def test_explicit_fields_override_schedule(self, quadratic):
        spec = OptimizerSpec(variant=Variant.DET_TR, K=7,
                             schedule=ScheduleRef(corollary=CorollaryId.C1, eps=0.5))
        config, _ = resolve_optimizer(spec, quadratic, ParamPoint.zeros(quadratic.shape))
        assert config.K == 7

    def test_resolve_without_schedule(self, quadratic):
        spec = OptimizerSpec(variant=Variant.MOMENTUM, eta=0.1, alpha=0.3, K=12)
        config, plan = resolve_optimizer(spec, quadratic, ParamPoint.zeros(quadratic.shape))
        assert plan is None
        assert (config.eta, config.alpha, config.K) == (0.1, 0.3, 12)


class TestBoundChecks:
    """Test empirical checks on recorded runs."""

    def test_t1_holds(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=200)
        x0 = ParamPoint.zeros(quadratic.shape)
        record = run(config, quadratic, seed=0, x0=x0)
        report = check_bound(TheoremId.T1, [record], constants_for(quadratic, config, x0))
        assert report.holds
        assert report.lhs == record.summary.min_residual
        assert report.margin == pytest.approx(report.rhs - report.lhs)

    def test_descent_holds(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=100)
        x0 = ParamPoint.zeros(quadratic.shape)
        record = run(config, quadratic, seed=0, x0=x0)
        assert descent_check(record, constants_for(quadratic, config, x0)).holds

    def test_noiseless_momentum_error(self, quadratic):
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.02, alpha=0.2, K=50)
        x0 = ParamPoint.zeros(quadratic.shape)
        record = run(config, quadratic, seed=0, x0=x0)
        report = momentum_error_check([record], constants_for(quadratic, config, x0))
        assert report.holds
        assert report.theorem == "momentum_error[momentum]"

    def test_stochastic_needs_seeds(self, quadratic):
        config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.02, alpha=0.2, K=10)
        noisy = quadratic.with_sigma(1.0)
        x0 = ParamPoint.zeros(quadratic.shape)
        records = run_many(config, noisy, [0, 1], x0, record_wall_time=False)
        with pytest.raises(BoundCheckError, match="seeds"):
            check_bound(TheoremId.T2, records, constants_for(noisy, config, x0))

    def test_mixed_configs_rejected(self, quadratic):
        x0 = ParamPoint.zeros(quadratic.shape)
        a = run(OptimizerConfig(variant=Variant.DET_TR, eta=0.05, K=5), quadratic, 0, x0)
        b = run(OptimizerConfig(variant=Variant.DET_TR, eta=0.01, K=5), quadratic, 0, x0)
        with pytest.raises(BoundCheckError):
            check_bound(TheoremId.T1, [a, b], constants_for(quadratic, a.config, x0))

    def test_iterate_bound(self, quadratic):
        config = OptimizerConfig(variant=Variant.DET_TR_DECAY, eta=0.05, beta=0.1, K=100)
        x0 = ParamPoint.zeros(quadratic.shape)
        record = run(config, quadratic, seed=0, x0=x0)
        report = iterate_bound_check(record, constants_for(quadratic, config, x0))
        assert report.holds
        assert report.hypotheses_ok

    def test_t4_holds(self):
        problem = make_quadratic(5, 5.0, seed=1, x_star_scale=0.5)
        config = OptimizerConfig(variant=Variant.DET_TR_DECAY, eta=0.05, beta=0.01, K=300)
        x0 = ParamPoint.zeros(problem.shape)
        record = run(config, problem, seed=0, x0=x0)
        assert check_bound(TheoremId.T4, [record], constants_for(problem, config, x0)).holds

    def test_prox_inequality_along_clipped_run(self):
        problem = make_quadratic(4, 4.0, seed=2, x_star=np.array([0.5, -0.3, 0.2, 0.1]))
        config = OptimizerConfig(variant=Variant.DET_TR, geometry=GeometryKind.INFINITY,
                                 regularizer=Regularizer.clip_ball(0.25), eta=0.1, K=30)
        assert prox_check_run(config, problem, seed=0).holds


SEEDS = list(range(20))


class TestStochasticEnvelopes:
    """Seed-averaged momentum-error envelopes and convergence bounds under noise."""

    @pytest.fixture
    def noisy_layer(self):
        return make_matrix_layer(3, 3, 8, LossKind.LOGISTIC, seed=0, sigma=1.0)

    @pytest.mark.parametrize("variant", [Variant.MOMENTUM, Variant.EXTRAPOLATION])
    def test_momentum_error_layer(self, noisy_layer, variant):
        config = OptimizerConfig(variant=variant, geometry=GeometryKind.SPECTRAL, eta=0.01, alpha=0.1, K=60)
        x0 = ParamPoint.zeros(noisy_layer.shape)
        records = run_many(config, noisy_layer, SEEDS, x0, record_wall_time=False)
        report = momentum_error_check(records, constants_for(noisy_layer, config, x0))
        assert report.n_records == 20
        assert report.holds, report

    def test_momentum_error_weight_decay(self):
        problem = make_quadratic(5, 5.0, seed=1, sigma=0.5, x_star_scale=0.5)
        config = OptimizerConfig(variant=Variant.MOMENTUM_DECAY, eta=0.05, alpha=0.1, beta=0.02, K=100)
        x0 = ParamPoint.zeros(problem.shape)
        records = run_many(config, problem, SEEDS, x0, record_wall_time=False)
        report = momentum_error_check(records, constants_for(problem, config, x0))
        assert report.holds, report

    def test_t2_seed_mean(self, noisy_layer):
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.SPECTRAL, eta=0.01, alpha=0.1, K=100)
        x0 = ParamPoint.zeros(noisy_layer.shape)
        records = run_many(config, noisy_layer, SEEDS, x0, record_wall_time=False)
        report = check_bound(TheoremId.T2, records, constants_for(noisy_layer, config, x0))
        assert report.detail.startswith("mean over 20")
        assert report.holds, report

    @pytest.mark.parametrize("theorem, variant", [
        (TheoremId.T5, Variant.MOMENTUM_DECAY),
        (TheoremId.T7, Variant.EXTRAPOLATION),
    ])
    def test_weight_decay_seed_mean(self, theorem, variant):
        problem = make_quadratic(5, 5.0, seed=1, sigma=0.5, x_star_scale=0.5)
        config = OptimizerConfig(variant=variant, eta=0.05, alpha=0.1, beta=0.02, K=150)
        x0 = ParamPoint.zeros(problem.shape)
        records = run_many(config, problem, SEEDS, x0, record_wall_time=False)
        report = check_bound(theorem, records, constants_for(problem, config, x0))
        assert report.holds, report

    def test_t9_clipped_seed_mean(self):
        problem = make_quadratic(4, 4.0, seed=2, sigma=0.1, x_star=np.array([0.5, -0.3, 0.2, 0.1]))
        config = OptimizerConfig(variant=Variant.MOMENTUM, geometry=GeometryKind.INFINITY,
                                 regularizer=Regularizer.clip_ball(1.0), eta=0.01, alpha=0.1, K=300)
        x0 = ParamPoint.zeros(problem.shape)
        records = run_many(config, problem, SEEDS, x0, record_wall_time=False)
        report = check_bound(TheoremId.T9_D, records, constants_for(problem, config, x0))
        assert report.holds, report


class TestComparison:
    """Test the Muon/OSGDM grid."""

    def test_table_shape(self):
        problem = make_matrix_layer(3, 3, 8, LossKind.LOGISTIC, seed=0)
        rows = muon_vs_osgdm(problem, sigmas=[0.0, 1.0], etas=[0.05], seeds=[0, 1], K=10)
        assert len(rows) == 4
        assert [r.algorithm for r in rows[:2]] == [Variant.MUON_REF, Variant.OSGDM_REF]
        assert all(len(r.momentum_err_trace) == 10 for r in rows)
        assert all(len(r.final_residuals) == 2 for r in rows)

    def test_per_seed_traces(self):
        """Per-seed traces are kept and average to the reported seed-mean trace."""
        problem = make_matrix_layer(3, 3, 8, LossKind.LOGISTIC, seed=0)
        rows = muon_vs_osgdm(problem, sigmas=[1.0], etas=[0.05], seeds=[3, 7], K=6)
        for row in rows:
            assert row.seeds == [3, 7]
            assert len(row.momentum_err_traces) == 2
            assert all(len(trace) == 6 for trace in row.momentum_err_traces)
            for k in range(6):
                expected = (row.momentum_err_traces[0][k] + row.momentum_err_traces[1][k]) / 2
                assert row.momentum_err_trace[k] == pytest.approx(expected)
            # noise differs between seeds, so the traces do too
            assert row.momentum_err_traces[0] != row.momentum_err_traces[1]

    def test_comparison_csv_has_seed_rows(self, tmp_path):
        problem = make_matrix_layer(3, 3, 8, LossKind.LOGISTIC, seed=0)
        rows = muon_vs_osgdm(problem, sigmas=[1.0], etas=[0.05], seeds=[0, 1], K=5)
        frame = pl.read_csv(write_comparison_csv(rows, tmp_path / "cmp.csv"))
        for column in ("seed", "k", "momentum_err", "final_residual", "mean_momentum_err"):
            assert column in frame.columns
        assert frame.height == 2 * 2 * 5
        muon_seed1 = frame.filter((pl.col("algorithm") == "muon_ref") & (pl.col("seed") == 1))
        assert muon_seed1["momentum_err"].to_list() == pytest.approx(rows[0].momentum_err_traces[1])
        assert muon_seed1["final_residual"].to_list() == pytest.approx([rows[0].final_residuals[1]] * 5)

    def test_rejects_vector_problem(self, quadratic):
        with pytest.raises(ValueError):
            muon_vs_osgdm(quadratic, sigmas=[0.0], etas=[0.1], seeds=[0])


class TestSuites:
    """Test the fast verify suites end to end."""

    def test_geometry_suite_passes(self):
        outcome = geometry_suite()
        assert outcome.checks
        assert outcome.passed, [c for c in outcome.failures]

    def test_trstep_suite_passes(self):
        outcome = trstep_suite()
        assert outcome.passed, [c for c in outcome.failures]
        names = {c.name for c in outcome.checks}
        assert "momentum_spectral_equals_muon" in names

    @pytest.mark.slow
    def test_lemmas_suite_passes(self):
        outcome = run_suite("lemmas", jobs=4)
        assert outcome.passed, [c for c in outcome.failures]
        names = {c.name for c in outcome.checks}
        assert {"momentum_error_envelope", "momentum_error_weight_decay", "momentum_error_extrapolation"} <= names
        assert "lipschitz_estimate_below_analytic" in names

    @pytest.mark.slow
    def test_theorems_suite_passes(self):
        outcome = run_suite("theorems", jobs=4)
        assert outcome.passed, [c for c in outcome.failures]
        names = {c.name for c in outcome.checks}
        assert {"T2_matrix_layer", "T5_quadratic", "T7_quadratic", "T9_D_quadratic"} <= names
        assert outcome.comparison

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suite("nonsense")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
