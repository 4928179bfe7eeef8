"""Compressive monitoring of channel gains by differential l1 recovery."""

from .adaptive import (AdaptationPolicy, Verdict, classify, scan_and_update,
                       split, test_statistic, thresholds)
from .bpdn import (SolverProblem, SolverSolution, constrained_solve,
                   convex_opt, oracle_solve)
from .channel import (NoiseModel, VariationModel, denormalize, evolve_state,
                      is_sparse_variation, renormalize, sparsity_distance,
                      transmit_round)
from .core import (EstimateResult, RoundConfig, SimulatedMedium, SolverOptions,
                   admot_round, differential, estimate, estimation_error,
                   relative_error)
from .errors import (AdmotError, InfeasibleError, InvalidDimensionError,
                     InvalidParameterError, NoConvergenceError,
                     SliceOverflowError)
from .probe import Alphabet, ProbeMatrix, column, generate, row_slice

__all__ = [
    "AdaptationPolicy", "Verdict", "classify", "scan_and_update", "split",
    "test_statistic", "thresholds",
    "SolverProblem", "SolverSolution", "constrained_solve", "convex_opt",
    "oracle_solve",
    "NoiseModel", "VariationModel", "denormalize", "evolve_state",
    "is_sparse_variation", "renormalize", "sparsity_distance",
    "transmit_round",
    "EstimateResult", "RoundConfig", "SimulatedMedium", "SolverOptions",
    "admot_round", "differential", "estimate", "estimation_error",
    "relative_error",
    "AdmotError", "InfeasibleError", "InvalidDimensionError",
    "InvalidParameterError", "NoConvergenceError", "SliceOverflowError",
    "Alphabet", "ProbeMatrix", "column", "generate", "row_slice",
]

__version__ = "0.1.0"
