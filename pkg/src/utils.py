"""
Utility functions shared by the library, the harness and the CLI.
"""
import logging
import math
from typing import Iterable, Optional


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Setup logging configuration."""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    return logging.getLogger(__name__)


def safe_ratio(numerator: float, denominator: float) -> float:
    """
    Divide, mapping a zero denominator to +inf.

    Schedules take minima over expressions such as eps^3 / (rho^2 sigma^2 L);
    with sigma = 0 the term is simply inactive.
    """
    if denominator == 0.0:
        return math.inf
    return numerator / denominator


def log_factor(eps: float) -> int:
    """Instantiate the logarithmic factor hidden in O-tilde as ceil(log(1/eps) + 1)."""
    return max(1, math.ceil(math.log(1.0 / eps) + 1.0))


def mean(values: Iterable[float]) -> float:
    """Arithmetic mean; 0.0 for an empty sequence."""
    values = list(values)
    if not values:
        return 0.0
    return math.fsum(values) / len(values)


def format_float(value: Optional[float]) -> str:
    """Stable short rendering for report tables."""
    if value is None:
        return "-"
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def parse_values(raw: str) -> list[float]:
    """Parse a comma-separated list of numbers ("0.01,0.1,1")."""
    values = []
    for token in raw.split(','):
        token = token.strip()
        if token:
            values.append(float(token))
    if not values:
        raise ValueError("empty value list")
    return values
