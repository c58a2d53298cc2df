"""
Command-line interface for the trust-region optimizer library and its verification harness.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from src.config import settings
from src.experiments import (
    ConfigError, load_experiment_config, resolve_output_dir, run_experiment, sweep_experiment, verify,
)
from src.harness.suites import SUITES
from src.models import ExperimentConfig, SweepParam
from src.optimizers.schedules import ScheduleError
from src.utils import format_float, parse_values, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def run_command(args) -> int:
    """Execute run command."""
    config = load_experiment_config(Path(args.config))
    out_dir = resolve_output_dir(args.out_dir, config.output_dir)
    summary = run_experiment(config, out_dir, jobs=args.jobs, seed_offset=args.seed_offset)

    logger.info("\n" + "-" * 80)
    logger.info("SUMMARY")
    logger.info("-" * 80)
    logger.info(f"Experiment: {summary.name}")
    logger.info(f"Variant: {summary.config.variant.value} ({summary.config.geometry.value})")
    if summary.schedule is not None:
        logger.info(f"Schedule: {summary.schedule.corollary.value} -> eta={summary.schedule.eta:.6g}, "
                    f"alpha={summary.schedule.alpha:.6g}, K={summary.schedule.K}")
    logger.info(f"Runs: {len(summary.runs)}")
    logger.info(f"Mean min residual: {format_float(summary.mean_min_residual)}")
    logger.info(f"Mean final F: {format_float(summary.mean_final_F)}")
    logger.info(f"\n✓ Results saved to {out_dir}")
    return EXIT_OK


def verify_command(args) -> int:
    """Execute verify command."""
    out_dir = resolve_output_dir(args.out_dir)
    outcome = verify(args.suite, out_dir, jobs=args.jobs)

    logger.info("\n" + "=" * 80)
    logger.info(f"VERIFY {args.suite.upper()}")
    logger.info("=" * 80)
    for check in outcome.checks:
        mark = "✓" if check.passed else "✗"
        logger.info(f"{mark} {check.suite}/{check.name}  {check.detail}")
    passed = sum(1 for c in outcome.checks if c.passed)
    logger.info(f"\n{passed}/{len(outcome.checks)} checks passed; report in {out_dir / f'verify_{args.suite}.txt'}")

    if not outcome.passed:
        logger.error("\n⚠️  FAILED CHECKS:")
        for check in outcome.failures:
            logger.error(f"  - {check.suite}/{check.name}: {check.detail}")
        return EXIT_FAILURE
    return EXIT_OK


def sweep_command(args) -> int:
    """Execute sweep command."""
    config = load_experiment_config(Path(args.config))
    out_dir = resolve_output_dir(args.out_dir, config.output_dir)
    param = SweepParam(args.param)
    values = parse_values(args.values)
    rows = sweep_experiment(config, param, values, out_dir, jobs=args.jobs, seed_offset=args.seed_offset)

    logger.info("\n" + "=" * 80)
    logger.info(f"SWEEP {param.value.upper()}")
    logger.info("=" * 80)
    for row in rows:
        logger.info(f"{param.value}={row.value:<10g} min residual {format_float(row.mean_min_residual):>12}  "
                    f"final F {format_float(row.mean_final_F):>12}")
    logger.info(f"\n✓ Results saved to {out_dir / f'sweep_{param.value}.csv'}")
    return EXIT_OK


def schema_command(args) -> int:
    """Print the experiment config JSON schema."""
    print(json.dumps(ExperimentConfig.model_json_schema(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--jobs', '-j', type=int, default=None, help='Parallel runs (default: TR_JOBS)')
    common.add_argument('--out-dir', '-o', default=None, help='Output directory (overrides TR_OUTPUT_DIR)')
    common.add_argument('--seed-offset', type=int, default=0, help='Added to every configured seed')
    common.add_argument('--log-level', default=settings.log_level.upper(),
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level')

    parser = argparse.ArgumentParser(
        description="Trust-region optimizers under non-Euclidean geometries, with bound verification"
    )
    subparsers = parser.add_subparsers(dest='command', help='Commands')

    # Run command
    run_parser = subparsers.add_parser('run', parents=[common], help='Run an experiment config')
    run_parser.add_argument('config', help='Experiment config (JSON)')

    # Verify command
    verify_parser = subparsers.add_parser('verify', parents=[common], help='Run a verification suite')
    verify_parser.add_argument('suite', choices=list(SUITES) + ['all'], help='Suite to run')

    # Sweep command
    sweep_parser = subparsers.add_parser('sweep', parents=[common], help='Sweep one parameter of a config')
    sweep_parser.add_argument('config', help='Experiment config (JSON)')
    sweep_parser.add_argument('--param', '-p', required=True, choices=[p.value for p in SweepParam],
                              help='Parameter to vary')
    sweep_parser.add_argument('--values', '-v', required=True, help='Comma-separated values')

    # Schema command
    subparsers.add_parser('schema', parents=[common], help='Print the experiment config JSON schema')
    return parser


def main(argv=None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_FAILURE

    setup_logging(args.log_level)
    commands = {
        'run': run_command,
        'verify': verify_command,
        'sweep': sweep_command,
        'schema': schema_command,
    }
    try:
        return commands[args.command](args)
    except KeyboardInterrupt:
        logger.info("\n\nInterrupted by user")
        return EXIT_OK
    except ConfigError as e:
        logger.error(f"\nConfig error: {e}")
        return EXIT_CONFIG
    except (ValidationError, json.JSONDecodeError, ScheduleError) as e:
        logger.error(f"\nInvalid parameters: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"\nError: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
