"""One monitoring round at a single receiver.

The receiver probes ``m`` slots, subtracts what its prior predicts, and
recovers the (sparse) change by two l1 solves, one per real part.
"""

from dataclasses import dataclass, field

import numpy as np

from .bpdn import SolverProblem, convex_opt, factorize
from .channel import NoiseModel, transmit_round
from .errors import (InfeasibleError, InvalidDimensionError,
                     InvalidParameterError, NoConvergenceError,
                     SliceOverflowError)
from .probe import ProbeMatrix, row_slice

__all__ = ["RoundConfig", "SolverOptions", "EstimateResult", "SimulatedMedium",
           "differential", "estimate", "admot_round", "estimation_error",
           "relative_error", "default_sigma"]


@dataclass(frozen=True)
class SolverOptions:
    optimality_tol: float = 1e-4
    max_iter: int = 10_000
    feasibility_tol: float = None


@dataclass(frozen=True)
class RoundConfig:
    """``sigma=None`` selects the noise-matched radius ``sqrt(2 m)``."""

    m: int
    sigma: float = None
    solver: SolverOptions = SolverOptions()
    round_index: int = 0

    def radius(self, m=None):
        m = self.m if m is None else m
        return default_sigma(m) if self.sigma is None else float(self.sigma)


def default_sigma(m):
    # ||Z||_2 <= sqrt(2m) w.h.p. for m i.i.d. unit normals
    return float(np.sqrt(2.0 * m))


@dataclass
class EstimateResult:
    h_star: np.ndarray
    delta_star: np.ndarray
    solution_re: object
    solution_im: object
    Y: np.ndarray
    D: np.ndarray
    m: int
    sigma: float
    info: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return self.solution_re.iterations + self.solution_im.iterations


class SimulatedMedium:
    """Shared wireless medium for one round: true state plus noise stream."""

    def __init__(self, H, noise=NoiseModel(), rng=None):
        self.H = np.asarray(H, dtype=complex)
        self.noise = noise
        self.rng = rng

    def probe(self, phi_m):
        return transmit_round(phi_m, self.H, self.noise, self.rng)


def _matrix(phi):
    return phi.entries if isinstance(phi, ProbeMatrix) else np.asarray(phi)


def differential(Y, phi_m, H_hat):
    """``D = Y - phi_m @ H_hat``."""
    Y = np.asarray(Y, dtype=complex)
    phi_m = np.asarray(phi_m)
    H_hat = np.asarray(H_hat, dtype=complex)
    if phi_m.shape != (Y.size, H_hat.size):
        raise InvalidDimensionError(
            f"phi_m {phi_m.shape} vs Y {Y.shape} and H_hat {H_hat.shape}")
    return Y - phi_m @ H_hat


def estimate(Y, phi_m, H_hat, sigma, solver=SolverOptions(), factorization=None,
             fixed_zero=None):
    """Differential, split recovery and state update for a given observation.

    ``fixed_zero`` (0-based) pins one coordinate of the change to zero.
    """
    D = differential(Y, phi_m, H_hat)
    A = np.asarray(phi_m, dtype=float)
    keep = None
    if fixed_zero is not None:
        if not 0 <= fixed_zero < A.shape[1]:
            raise InvalidDimensionError(f"fixed index {fixed_zero} out of range")
        keep = np.arange(A.shape[1]) != fixed_zero
        A = A[:, keep]
    fac = factorization if factorization is not None else factorize(A)
    sols = []
    for part in (D.real, D.imag):
        prob = SolverProblem(A, part, sigma, solver.feasibility_tol,
                             solver.optimality_tol, solver.max_iter)
        sols.append(convex_opt(prob, factorization=fac))
    delta = sols[0].x_star + 1j * sols[1].x_star
    if keep is not None:
        full = np.zeros(keep.size, dtype=complex)
        full[keep] = delta
        delta = full
    H_hat = np.asarray(H_hat, dtype=complex)
    return EstimateResult(H_hat + delta, delta, sols[0], sols[1],
                          np.asarray(Y, dtype=complex), D, A.shape[0], float(sigma))


def admot_round(H_hat, phi, config, medium):
    """Run one round: probe ``config.m`` slots, then recover ``H``.

    ``phi`` is a :class:`ProbeMatrix` or an ``N x n`` array; ``medium``
    is anything with ``probe(phi_m) -> Y`` (see :class:`SimulatedMedium`).
    """
    entries = _matrix(phi)
    if not 1 <= config.m:
        raise InvalidParameterError(f"m must be >= 1, got {config.m}")
    H_hat = np.asarray(H_hat, dtype=complex)
    if entries.shape[1] != H_hat.size:
        raise InvalidDimensionError(
            f"prior has {H_hat.size} entries, probe matrix {entries.shape[1]} columns")
    phi_m = row_slice(phi, config.m) if isinstance(phi, ProbeMatrix) else entries[:config.m]
    if phi_m.shape[0] < config.m:
        raise SliceOverflowError(f"m={config.m} exceeds {entries.shape[0]} rows")
    Y = medium.probe(phi_m)
    try:
        return estimate(Y, phi_m, H_hat, config.radius(), config.solver)
    except (InfeasibleError, NoConvergenceError) as exc:
        raise NoConvergenceError(
            f"round {config.round_index} (m={config.m}): {exc}",
            {"round": config.round_index, "m": config.m, "cause": exc}) from exc


def estimation_error(H_star, H):
    """Complex l2 error ``sqrt(||Re||^2 + ||Im||^2)``."""
    H_star, H = np.asarray(H_star, dtype=complex), np.asarray(H, dtype=complex)
    if H_star.shape != H.shape:
        raise InvalidDimensionError(f"lengths differ: {H_star.shape} vs {H.shape}")
    return float(np.linalg.norm(H_star - H))


def relative_error(H_star, H):
    return estimation_error(H_star, H) / float(np.linalg.norm(H))
