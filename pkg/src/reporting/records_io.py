"""
CSV / JSON persistence of run records, sweeps, comparisons and verify reports.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import polars as pl

from ..models import (
    CheckResult, ComparisonRow, ExperimentSummary, RunEntry, RunRecord, RunRow, Schedule, SweepRow,
)
from ..utils import format_float, mean


logger = logging.getLogger(__name__)

RUN_SCHEMA = {
    "k": pl.Int64,
    "F": pl.Float64,
    "residual": pl.Float64,
    "x_norm": pl.Float64,
    "momentum_err": pl.Float64,
    "wall_ms": pl.Float64,
}


def run_csv_name(name: str, seed: int) -> str:
    return f"{name}_seed{seed}.csv"


def write_run_csv(record: RunRecord, path: Path) -> Path:
    """Write one row per iteration with columns k, F, residual, x_norm, momentum_err, wall_ms."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {name: [getattr(row, name) for row in record.rows] for name in RUN_SCHEMA}
    frame = pl.DataFrame(columns, schema=RUN_SCHEMA)
    frame.write_csv(path)
    return path


def read_run_csv(path: Path) -> List[RunRow]:
    frame = pl.read_csv(path, schema=RUN_SCHEMA)
    return [RunRow(**row) for row in frame.iter_rows(named=True)]


def build_summary(name: str, records: Sequence[RunRecord], schedule: Optional[Schedule] = None) -> ExperimentSummary:
    if not records:
        raise ValueError("no records to summarize")
    return ExperimentSummary(
        name=name,
        problem=records[0].problem,
        config=records[0].config,
        schedule=schedule,
        runs=[RunEntry(seed=r.seed, csv=run_csv_name(name, r.seed), summary=r.summary) for r in records],
        mean_min_residual=mean(r.summary.min_residual for r in records),
        mean_final_F=mean(r.summary.final_F for r in records),
    )


def write_summary(summary: ExperimentSummary, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_summary(path: Path) -> ExperimentSummary:
    return ExperimentSummary.model_validate_json(Path(path).read_text(encoding="utf-8"))


def aggregate_sweep(param, value: float, records: Sequence[RunRecord]) -> SweepRow:
    gaps = [r.summary.final_gap for r in records]
    return SweepRow(
        param=param,
        value=value,
        variant=records[0].config.variant,
        n_runs=len(records),
        mean_min_residual=mean(r.summary.min_residual for r in records),
        mean_final_residual=mean(r.summary.final_residual for r in records),
        mean_final_F=mean(r.summary.final_F for r in records),
        mean_final_gap=None if any(g is None for g in gaps) else mean(gaps),
    )


def write_sweep_csv(rows: Iterable[SweepRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pl.DataFrame([row.model_dump(mode="json") for row in rows])
    frame.write_csv(path)
    return path


def write_comparison_csv(rows: Sequence[ComparisonRow], path: Path) -> Path:
    """
    Write the Muon/OSGDM table in long format: one line per
    (algorithm, sigma, eta, seed, k) with that seed's momentum error and final residual.
    The seed-mean columns repeat the aggregate for the same (algorithm, sigma, eta, k).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = []
    for row in rows:
        for seed, final, trace in zip(row.seeds, row.final_residuals, row.momentum_err_traces):
            for k, err in enumerate(trace):
                records.append({
                    "algorithm": row.algorithm.value,
                    "sigma": row.sigma,
                    "eta": row.eta,
                    "alpha": row.alpha,
                    "seed": seed,
                    "k": k,
                    "momentum_err": err,
                    "final_residual": final,
                    "mean_momentum_err": row.momentum_err_trace[k],
                    "mean_final_residual": row.mean_final_residual,
                    "mean_min_residual": row.mean_min_residual,
                })
    pl.DataFrame(records).write_csv(path)
    return path


def render_checks(checks: Sequence[CheckResult]) -> str:
    """Fixed-width pass/fail table; contains no timestamps, so reruns render identically."""
    width = max([len(c.suite) + len(c.name) + 1 for c in checks] + [10])
    lines = [f"{'check':<{width}}  result  detail", "-" * (width + 40)]
    for c in checks:
        lines.append(f"{c.suite + '/' + c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  {c.detail}")
    failed = sum(1 for c in checks if not c.passed)
    lines.append("-" * (width + 40))
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def render_comparison(rows: Sequence[ComparisonRow]) -> str:
    lines = [f"{'algorithm':<10} {'sigma':>8} {'eta':>8} {'final residual':>16} {'min residual':>14} {'last momentum err':>18}"]
    for row in rows:
        last = row.momentum_err_trace[-1] if row.momentum_err_trace else None
        lines.append(
            f"{row.algorithm.value:<10} {format_float(row.sigma):>8} {format_float(row.eta):>8} "
            f"{format_float(row.mean_final_residual):>16} {format_float(row.mean_min_residual):>14} "
            f"{format_float(last):>18}"
        )
    return "\n".join(lines) + "\n"


def write_text(text: str, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
