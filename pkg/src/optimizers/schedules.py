"""
Corollary parameter schedules.

Every O(.) constant is set to 1 and every O-tilde log factor is instantiated as
ceil(log(1/eps) + 1). Terms whose denominator vanishes (sigma = 0 or H = 0) are
inactive: they evaluate to +inf inside a min and are skipped inside a max.
"""
import logging
import math
from typing import Dict, Iterable, Tuple

from ..models import CorollaryId, Schedule, ScheduleInputs
from ..utils import log_factor, safe_ratio


logger = logging.getLogger(__name__)


class ScheduleError(ValueError):
    """Raised when a corollary lacks a required input."""


REQUIRED_INPUTS: Dict[CorollaryId, Tuple[str, ...]] = {
    CorollaryId.C1: ("L", "delta0"),
    CorollaryId.C2: ("L", "delta0", "sigma", "rho"),
    CorollaryId.C4: ("L", "D"),
    CorollaryId.C5: ("L", "D", "sigma", "rho"),
    CorollaryId.C6: ("L", "H", "sigma", "rho", "delta0"),
    CorollaryId.C7: ("L", "H", "D", "sigma", "rho"),
    CorollaryId.C8: ("L", "D"),
    CorollaryId.C9: ("L", "D", "sigma", "rho"),
}

# Inputs that may legitimately be zero (a noiseless oracle, a quadratic objective).
_MAY_BE_ZERO = {"sigma", "H", "delta0"}


def _check_inputs(corollary: CorollaryId, inputs: ScheduleInputs) -> None:
    missing = [name for name in REQUIRED_INPUTS[corollary] if getattr(inputs, name) is None]
    if missing:
        raise ScheduleError(f"{corollary.value} requires {', '.join(missing)}")
    for name in REQUIRED_INPUTS[corollary]:
        value = getattr(inputs, name)
        if value < 0 or (value == 0 and name not in _MAY_BE_ZERO):
            raise ScheduleError(f"{corollary.value}: {name} must be positive, got {value}")


def _finite_max(terms: Iterable[float]) -> float:
    finite = [t for t in terms if math.isfinite(t)]
    return max(finite) if finite else 1.0


def _iterations(value: float) -> int:
    # Absorb float noise such as 10 / 0.1**2 = 999.9999999999998 or 1000.0000000000002.
    return max(1, math.ceil(value - 1e-9 * max(1.0, value)))


def _alpha_noise(eps: float, noise: float) -> float:
    """alpha = min(1, eps^2 / noise^2) with noise the dual-norm noise scale."""
    return min(1.0, safe_ratio(eps ** 2, noise ** 2))


def _c1(i: ScheduleInputs) -> Schedule:
    eta = i.eps / i.L
    K = _iterations(i.L * i.delta0 / i.eps ** 2)
    return Schedule(corollary=CorollaryId.C1, eta=eta, K=K)


def _c2(i: ScheduleInputs) -> Schedule:
    rs = i.rho * i.sigma
    eps, L = i.eps, i.L
    eta = min(eps / L, safe_ratio(eps ** 3, rs ** 2 * L))
    alpha = _alpha_noise(eps, rs)
    K = _iterations(_finite_max([
        rs / eps,
        (rs / eps) ** 3,
        L * i.delta0 / eps ** 2,
        L * i.delta0 * rs ** 2 / eps ** 4,
    ]))
    return Schedule(corollary=CorollaryId.C2, eta=eta, alpha=alpha, K=K)


def _c4(i: ScheduleInputs) -> Schedule:
    eps, L, D = i.eps, i.L, i.D
    beta = min(1.0, eps / (L * D ** 2))
    K = _iterations(max(1.0, L * D ** 2 / eps) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C4, eta=beta * D, beta=beta, K=K)


def _c5(i: ScheduleInputs) -> Schedule:
    eps, L, D = i.eps, i.L, i.D
    rs = i.rho * i.sigma
    alpha = _alpha_noise(eps, D * rs)
    beta = min(
        1.0,
        eps / (L * D ** 2),
        safe_ratio(eps, D * rs),
        safe_ratio(eps, D * rs) ** 3,
        safe_ratio(eps ** 3, L * D ** 3 * rs ** 2),
    )
    K = _iterations(max(
        1.0,
        L * D ** 2 / eps,
        D * rs / eps,
        (D * rs / eps) ** 3,
        L * D ** 3 * rs ** 2 / eps ** 3,
    ) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C5, eta=beta * D, alpha=alpha, beta=beta, K=K)


def _c6(i: ScheduleInputs) -> Schedule:
    eps, L, H = i.eps, i.L, i.H
    rs = i.rho * i.sigma
    eta = min(
        eps / L,
        safe_ratio(math.sqrt(eps), math.sqrt(H)),
        safe_ratio(eps ** 2.5, rs ** 2 * math.sqrt(H)),
    )
    alpha = _alpha_noise(eps, rs)
    K = _iterations(_finite_max([
        rs / eps,
        (rs / eps) ** 3,
        L * i.delta0 / eps ** 2,
        math.sqrt(H) * i.delta0 / eps ** 1.5,
        math.sqrt(H) * i.delta0 * rs ** 2 / eps ** 3.5,
    ]) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C6, eta=eta, alpha=alpha, beta=0.0, gamma=1.0 / alpha, K=K)


def _c7(i: ScheduleInputs) -> Schedule:
    eps, L, H, D = i.eps, i.L, i.H, i.D
    rs = i.rho * i.sigma
    alpha = _alpha_noise(eps, D * rs)
    beta = min(
        1.0,
        eps / (L * D ** 2),
        safe_ratio(alpha * eps, D * rs),
        safe_ratio(alpha * math.sqrt(eps), math.sqrt(H) * D ** 1.5),
    )
    K = _iterations(max(
        1.0,
        D * rs / eps,
        (D * rs / eps) ** 3,
        L * D ** 2 / eps,
        math.sqrt(H) * D ** 1.5 / math.sqrt(eps),
        math.sqrt(H) * D ** 3.5 * rs ** 2 / eps ** 2.5,
    ) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C7, eta=beta * D, alpha=alpha, beta=beta, gamma=1.0 / alpha, K=K)


def _c8(i: ScheduleInputs) -> Schedule:
    eps, L, D = i.eps, i.L, i.D
    K = _iterations(max(1.0, L * D ** 2 / eps) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C8, eta=eps / (L * D), K=K)


def _c9(i: ScheduleInputs) -> Schedule:
    eps, L, D = i.eps, i.L, i.D
    rs = i.rho * i.sigma
    eta = min(
        eps / (L * D),
        safe_ratio(eps, rs),
        safe_ratio(eps ** 3, D ** 2 * rs ** 3),
        safe_ratio(eps ** 3, L * D ** 3 * rs ** 2),
    )
    alpha = _alpha_noise(eps, D * rs)
    K = _iterations(max(
        1.0,
        L * D ** 2 / eps,
        D * rs / eps,
        (D * rs / eps) ** 3,
        L * D ** 4 * rs ** 2 / eps ** 3,
    ) * log_factor(eps))
    return Schedule(corollary=CorollaryId.C9, eta=eta, alpha=alpha, K=K)


_SCHEDULES = {
    CorollaryId.C1: _c1,
    CorollaryId.C2: _c2,
    CorollaryId.C4: _c4,
    CorollaryId.C5: _c5,
    CorollaryId.C6: _c6,
    CorollaryId.C7: _c7,
    CorollaryId.C8: _c8,
    CorollaryId.C9: _c9,
}


def schedule(corollary: CorollaryId, inputs: ScheduleInputs) -> Schedule:
    """
    Evaluate a corollary's parameter choice.

    Args:
        corollary: Which corollary to instantiate
        inputs: eps plus the problem constants the corollary needs

    Returns:
        Schedule with eta, alpha, beta, gamma and an integer K

    Raises:
        ScheduleError: if a required input is missing or not positive
    """
    corollary = CorollaryId(corollary)
    _check_inputs(corollary, inputs)
    result = _SCHEDULES[corollary](inputs)
    logger.debug(f"schedule {corollary.value}: {result.model_dump()}")
    return result
