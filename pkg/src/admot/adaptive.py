"""Hold-out based adaptation of the number of probe slots ``m``.

After a round the receiver re-estimates the state from a prefix of the
slots and tests the estimate on the held-out tail: the squared residual
``||Y_2 - Phi_2 H_t||^2`` concentrates around ``d (phi^2 + 2)`` where
``phi = ||H - H_t||``, so a large value means the prefix was too short.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import SolverOptions, default_sigma, estimate
from .errors import InvalidDimensionError, InvalidParameterError

__all__ = ["Verdict", "HoldoutSplit", "AdaptationPolicy", "ScanStep",
           "AdaptationResult", "split", "test_statistic", "thresholds",
           "classify", "scan_and_update"]

log = logging.getLogger(__name__)

SQRT_3_2 = math.sqrt(1.5)
SQRT_2 = math.sqrt(2.0)


class Verdict(str, enum.Enum):
    SUFFICIENT = "SUFFICIENT"
    INSUFFICIENT = "INSUFFICIENT"


@dataclass
class HoldoutSplit:
    d: int
    Y1: np.ndarray
    Y2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray


def split(Y, phi_m, d):
    """First ``m - d`` slots for estimation, last ``d`` for testing."""
    Y = np.asarray(Y)
    m = Y.shape[0]
    if not 1 <= d < m:
        raise InvalidDimensionError(f"need 1 <= d < m, got d={d}, m={m}")
    if phi_m.shape[0] != m:
        raise InvalidDimensionError("phi_m rows do not match Y")
    return HoldoutSplit(d, Y[:m - d], Y[m - d:], phi_m[:m - d], phi_m[m - d:])


def test_statistic(Y2, phi2, H_t):
    """``||Y2 - phi2 @ H_t||_2^2`` under the complex norm."""
    Y2 = np.asarray(Y2, dtype=complex)
    H_t = np.asarray(H_t, dtype=complex)
    phi2 = np.asarray(phi2)
    if phi2.shape != (Y2.size, H_t.size):
        raise InvalidDimensionError(f"phi2 {phi2.shape} vs Y2 {Y2.shape}, H_t {H_t.shape}")
    r = Y2 - phi2 @ H_t
    return float(np.sum(r.real ** 2 + r.imag ** 2))


# keep pytest from collecting the function above as a test
test_statistic.__test__ = False


def thresholds(d, phi):
    """Concentration band for the statistic at true error ``phi``.

    Returns ``(upper, lower)``; ``lower`` is ``None`` unless
    ``phi > 2 sqrt(2)``.
    """
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d}")
    if phi < 0:
        raise InvalidParameterError(f"phi must be >= 0, got {phi}")
    upper = d * (phi * SQRT_3_2 + 2.0) ** 2
    lower = d * (phi / SQRT_2 - 2.0) ** 2 if phi > 2.0 * SQRT_2 else None
    return upper, lower


def classify(statistic, d, phi_tol):
    """INSUFFICIENT iff the statistic exceeds the upper band at ``phi_tol``."""
    upper, _ = thresholds(d, phi_tol)
    return Verdict.INSUFFICIENT if statistic > upper else Verdict.SUFFICIENT


@dataclass(frozen=True)
class AdaptationPolicy:
    """Controller settings.

    ``initial_d=None`` uses ``max(8, ceil(m / 8))``; ``m_max`` is the slot
    capacity ``N``.
    """

    phi_tol: float
    m_min: int
    m_max: int
    initial_d: int = None
    growth: float = 2.0
    slack: float = 0.25

    def __post_init__(self):
        if not 1 <= self.m_min <= self.m_max:
            raise InvalidParameterError("need 1 <= m_min <= m_max")
        if self.phi_tol < 0:
            raise InvalidParameterError("phi_tol must be >= 0")

    def first_holdout(self, m):
        return self.initial_d if self.initial_d is not None else max(8, math.ceil(m / 8))

    def clamp(self, m):
        return int(min(self.m_max, max(self.m_min, m)))

    def after_scan(self, prefix):
        """Next ``m`` once ``prefix`` slots proved sufficient.

        ``prefix`` plus ``slack``, and at least enough that the next round's
        first tested prefix ``m - d`` is not shorter than ``prefix``.
        """
        m = math.ceil(prefix * (1.0 + self.slack))
        while m - self.first_holdout(m) < prefix:
            m += 1
        return self.clamp(m)


@dataclass
class ScanStep:
    holdout: int
    prefix: int
    statistic: float
    upper: float
    verdict: Verdict


@dataclass
class AdaptationResult:
    m: int
    next_m: int
    steps: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def holdouts(self):
        return [s.holdout for s in self.steps]

    @property
    def verdicts(self):
        return [s.verdict for s in self.steps]


def _check(Y, phi_m, H_hat, prefix, holdout, policy, solver):
    est = estimate(Y[:prefix], phi_m[:prefix], H_hat, default_sigma(prefix), solver)
    tail = slice(prefix, prefix + holdout)
    stat = test_statistic(Y[tail], phi_m[tail], est.h_star)
    upper, _ = thresholds(holdout, policy.phi_tol)
    verdict = Verdict.INSUFFICIENT if stat > upper else Verdict.SUFFICIENT
    return ScanStep(holdout, prefix, stat, upper, verdict)


def scan_and_update(Y, phi_m, H_hat, policy, solver=SolverOptions()):
    """Choose ``m`` for the next round from this round's data.

    The first hold-out ``d`` is tested; if the ``m - d`` prefix is
    insufficient, ``m`` grows by ``policy.growth``.  Otherwise the
    hold-out doubles (``d, 2d, 4d, ...``, always the whole tail after the
    prefix) until a prefix fails or ``m_min`` is reached, and the next
    ``m`` is the shortest sufficient prefix plus a margin (see
    :meth:`AdaptationPolicy.after_scan`).
    """
    Y = np.asarray(Y, dtype=complex)
    phi_m = np.asarray(phi_m)
    m = Y.shape[0]
    d = policy.first_holdout(m)
    if m - d < 1:
        log.warning("round with m=%d too short for hold-out d=%d; keeping m", m, d)
        return AdaptationResult(m, policy.clamp(m), degenerate=True)

    first = _check(Y, phi_m, H_hat, m - d, d, policy, solver)
    result = AdaptationResult(m, m, [first])
    if first.verdict is Verdict.INSUFFICIENT:
        result.next_m = policy.clamp(math.ceil(policy.growth * m))
        return result

    shortest = first.prefix
    h = d
    while shortest > policy.m_min:
        h *= 2
        prefix = m - h
        if prefix < policy.m_min:
            prefix, h = policy.m_min, m - policy.m_min
        step = _check(Y, phi_m, H_hat, prefix, h, policy, solver)
        result.steps.append(step)
        if step.verdict is Verdict.INSUFFICIENT:
            break
        shortest = prefix
    result.next_m = policy.after_scan(shortest)
    return result
