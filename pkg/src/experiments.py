"""
Experiment orchestration for the CLI: config loading, runs, sweeps and verify reports.
"""
import json
import logging
import os
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from .config import settings
from .models import ExperimentConfig, ExperimentSummary, OptimizerSpec, ProblemSpec, SweepParam, SweepRow
from .harness.runner import initial_point, resolve_optimizer, run_many
from .harness.suites import SuiteOutcome, run_suite
from .problems.factory import build_problem
from .reporting.plots import plot_residuals
from .reporting.records_io import (
    aggregate_sweep, build_summary, render_checks, render_comparison, run_csv_name,
    write_comparison_csv, write_run_csv, write_summary, write_sweep_csv, write_text,
)


logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid experiment config, anchored to a file line when one can be found."""

    def __init__(self, path: Path, message: str, line: Optional[int] = None):
        self.path = Path(path)
        self.line = line
        self.message = message
        where = f"{self.path}:{line}" if line is not None else str(self.path)
        super().__init__(f"{where}: {message}")


def _locate(text: str, loc: Sequence) -> Optional[int]:
    """1-based line of the JSON key path `loc`, found by scanning for each key in order."""
    lines = text.splitlines()
    start, found = 0, None
    for key in loc:
        if not isinstance(key, str):
            continue
        needle = json.dumps(key)
        for index in range(start, len(lines)):
            if needle in lines[index]:
                found = start = index
                break
    return None if found is None else found + 1


def load_experiment_config(path: Path) -> ExperimentConfig:
    """
    Read and validate an experiment config file.

    Raises:
        ConfigError: unreadable file, malformed JSON or schema violation
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(path, f"cannot read config: {e.strerror or e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(path, f"malformed JSON: {e.msg} (column {e.colno})", line=e.lineno)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        more = f" (+{e.error_count() - 1} more)" if e.error_count() > 1 else ""
        raise ConfigError(path, f"{field}: {first['msg']}{more}", line=_locate(text, first["loc"]))


def resolve_output_dir(flag: Optional[str], config_dir: Optional[str] = None) -> Path:
    """--out-dir beats the TR_OUTPUT_DIR environment variable, which beats the config file."""
    if flag:
        return Path(flag)
    if os.getenv("TR_OUTPUT_DIR"):
        return Path(os.environ["TR_OUTPUT_DIR"])
    return Path(config_dir or settings.output_dir)


def run_experiment(config: ExperimentConfig, out_dir: Path, jobs: Optional[int] = None,
                   seed_offset: int = 0) -> ExperimentSummary:
    """
    Run every seed of an experiment and write CSVs, summary.json and residuals.svg.

    Args:
        config: Validated experiment config
        out_dir: Output directory
        jobs: Parallel runs
        seed_offset: Added to every configured seed

    Returns:
        The written summary
    """
    problem = build_problem(config.problem)
    x0 = initial_point(config.init, problem, config.optimizer.regularizer, config.problem.seed)
    optimizer_config, plan = resolve_optimizer(config.optimizer, problem, x0)
    seeds = [s + seed_offset for s in config.seeds]

    logger.info("=" * 80)
    logger.info(f"Experiment {config.name}: {optimizer_config.variant.value} on {problem.name} {problem.shape}")
    logger.info(f"eta={optimizer_config.eta:.6g} alpha={optimizer_config.alpha:.6g} "
                f"beta={optimizer_config.beta:.6g} K={optimizer_config.K} seeds={len(seeds)}")
    logger.info("=" * 80)

    records = run_many(optimizer_config, problem, seeds, x0, jobs=jobs, desc=config.name)
    out_dir = Path(out_dir)
    for record in records:
        write_run_csv(record, out_dir / run_csv_name(config.name, record.seed))
    summary = build_summary(config.name, records, plan)
    write_summary(summary, out_dir / "summary.json")
    plot_residuals(records, out_dir / "residuals.svg", title=f"{config.name}: {optimizer_config.variant.value}")

    logger.info(f"✓ {len(records)} run(s) written to {out_dir}")
    logger.info(f"  mean min residual: {summary.mean_min_residual:.6g}")
    for theorem, value in (records[0].summary.bounds or {}).items():
        logger.info(f"  {theorem} bound: {value:.6g}")
    return summary


def _with_value(config: ExperimentConfig, param: SweepParam, value: float) -> Tuple[ProblemSpec, OptimizerSpec]:
    if param == SweepParam.SIGMA:
        problem = ProblemSpec.model_validate({**config.problem.model_dump(), "sigma": value})
        return problem, config.optimizer
    optimizer = OptimizerSpec.model_validate({**config.optimizer.model_dump(), param.value: value})
    return config.problem, optimizer


def sweep_experiment(config: ExperimentConfig, param: SweepParam, values: Sequence[float], out_dir: Path,
                     jobs: Optional[int] = None, seed_offset: int = 0) -> List[SweepRow]:
    """
    Cartesian product of the config's seeds and `values` of one parameter.

    Each value gets its own sub-directory of run files; the seed means land in
    sweep_<param>.csv.
    """
    param = SweepParam(param)
    out_dir = Path(out_dir)
    seeds = [s + seed_offset for s in config.seeds]
    rows: List[SweepRow] = []
    for value in values:
        problem_spec, optimizer_spec = _with_value(config, param, value)
        problem = build_problem(problem_spec)
        x0 = initial_point(config.init, problem, optimizer_spec.regularizer, problem_spec.seed)
        optimizer_config, plan = resolve_optimizer(optimizer_spec, problem, x0)
        label = f"{param.value}={value:g}"
        records = run_many(optimizer_config, problem, seeds, x0, jobs=jobs, desc=label)
        group = out_dir / f"{param.value}_{value:g}"
        for record in records:
            write_run_csv(record, group / run_csv_name(config.name, record.seed))
        write_summary(build_summary(config.name, records, plan), group / "summary.json")
        rows.append(aggregate_sweep(param, value, records))
        logger.info(f"✓ {label}: {len(records)} runs, mean min residual {rows[-1].mean_min_residual:.6g}")
    write_sweep_csv(rows, out_dir / f"sweep_{param.value}.csv")
    return rows


def verify(suite: str, out_dir: Path, jobs: Optional[int] = None) -> SuiteOutcome:
    """Run a verify suite and write verify_<suite>.txt (plus the comparison CSV when present)."""
    outcome = run_suite(suite, jobs)
    report = render_checks(outcome.checks)
    if outcome.comparison:
        report += "\nMuon vs OSGDM (seed means)\n" + render_comparison(outcome.comparison)
        write_comparison_csv(outcome.comparison, Path(out_dir) / "muon_vs_osgdm.csv")
    write_text(report, Path(out_dir) / f"verify_{suite}.txt")
    return outcome
