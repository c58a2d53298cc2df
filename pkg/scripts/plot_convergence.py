"""
Re-plot residual curves from run CSVs written by `main.py run`.
"""
import argparse
import logging
import os
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.reporting.plots import plot_rows
from src.reporting.records_io import read_run_csv
from src.utils import setup_logging

logger = logging.getLogger(__name__)


def main():
    """Plot one or more run CSVs into a single SVG."""
    parser = argparse.ArgumentParser(description="Plot residual vs k from run CSVs")
    parser.add_argument('csv', nargs='+', help='Run CSV files')
    parser.add_argument('--output', '-o', default='residuals.svg', help='Output SVG file')
    parser.add_argument('--title', '-t', default='', help='Figure title')
    args = parser.parse_args()

    setup_logging("INFO")
    try:
        series = [(Path(p).stem, read_run_csv(Path(p))) for p in args.csv]
        path = plot_rows(series, Path(args.output), title=args.title)
        logger.info(f"✓ Plot saved to {path}")
    except Exception as e:
        logger.error(f"✗ Error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
