"""JSON experiment configurations.

Every random draw traces back to an explicit seed in these objects.
Unknown keys are rejected so that a typo never silently falls back to a
default.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field

from ..core import SolverOptions
from ..errors import InvalidParameterError

__all__ = ["Seeds", "PolicyConfig", "MonitorConfig", "SweepConfig",
           "Lemma3Config", "Theorem2Config", "GeneralConfig", "load_config",
           "DEFAULT_PHI_TOL_PER_SQRT_N"]

# phi_tol = c * sqrt(n); calibrated on the multi-round experiment (see README)
DEFAULT_PHI_TOL_PER_SQRT_N = 0.96


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise InvalidParameterError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise InvalidParameterError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class Seeds:
    probe: int = 0
    channel: int = 0
    noise: int = 0


@dataclass(frozen=True)
class PolicyConfig:
    """``None`` entries are filled from ``n``: ``phi_tol = 0.96 sqrt(n)``,
    ``m_min = max(8, n // 10)``, ``m_init = n``."""

    phi_tol: float = None
    m_min: int = None
    m_init: int = None
    initial_d: int = None
    growth: float = 2.0
    slack: float = 0.25


@dataclass(frozen=True)
class MonitorConfig:
    n: int = 100
    N: int = None
    rounds: int = 50
    stability: tuple = (80.0, 90.0, 98.0)
    snr_db: float = 20.0
    noise: bool = True
    small_range: tuple = (-10.0, 10.0)
    large_range: tuple = (-250.0, 250.0)
    initial_range: tuple = (-250.0, 250.0)
    sigma: float = None
    seeds: Seeds = field(default_factory=Seeds)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    gains_round: int = None
    gains_indices: tuple = None
    targets: tuple = None
    target_tolerance: float = 0.3
    output_dir: str = None

    def __post_init__(self):
        if self.n < 1 or self.rounds < 1:
            raise InvalidParameterError("n and rounds must be positive")
        N = self.n if self.N is None else int(self.N)
        if N < 1:
            raise InvalidParameterError("N must be positive")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "stability", tuple(float(x) for x in self.stability))
        if not self.stability:
            raise InvalidParameterError("need at least one stability value")
        if self.targets is not None:
            if len(self.targets) != len(self.stability):
                raise InvalidParameterError("targets must pair with stability values")
            object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        for name in ("small_range", "large_range", "initial_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidParameterError(f"{name} ({lo}, {hi}) is not ordered")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.gains_indices is not None:
            object.__setattr__(self, "gains_indices", tuple(int(i) for i in self.gains_indices))

    @property
    def phi_tol(self):
        p = self.policy.phi_tol
        return DEFAULT_PHI_TOL_PER_SQRT_N * math.sqrt(self.n) if p is None else float(p)

    @property
    def m_min(self):
        p = self.policy.m_min
        return max(8, self.n // 10) if p is None else int(p)

    @property
    def m_init(self):
        p = self.policy.m_init
        return min(self.n, self.N) if p is None else int(p)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["seeds"] = _build(Seeds, data.get("seeds"), "seeds")
        data["policy"] = _build(PolicyConfig, data.get("policy"), "policy")
        data["solver"] = _build(SolverOptions, data.get("solver"), "solver")
        return _build(cls, data, "monitor")


@dataclass(frozen=True)
class SweepConfig:
    """Minimal-``m`` sweep.  ``snr_db=None`` means noiseless with radius 0."""

    n: int = 256
    k: tuple = (2, 4, 8, 16)
    trials: int = 20
    success_rate: float = 0.9
    tolerance: float = None
    snr_db: float = None
    magnitude: float = 100.0
    prior_snr_db: float = 20.0
    seed: int = 0
    max_ratio_spread: float = 3.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    output_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(k) for k in self.k))
        if any(not 1 <= k <= self.n for k in self.k):
            raise InvalidParameterError("every k must lie in [1, n]")
        if not 0 < self.success_rate <= 1 or self.trials < 1:
            raise InvalidParameterError("bad success_rate or trials")

    @property
    def success_tolerance(self):
        if self.tolerance is not None:
            return float(self.tolerance)
        return 1e-3 if self.snr_db is None else 0.05

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["solver"] = _build(SolverOptions, data.get("solver"), "solver")
        return _build(cls, data, "sweep")


@dataclass(frozen=True)
class Lemma3Config:
    m: tuple = (20, 40)
    trials: int = 100_000
    seed: int = 0
    oracle_band: float = 0.001
    output_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if any(v < 2 for v in self.m) or self.trials < 1000:
            raise InvalidParameterError("need m >= 2 and trials >= 1000")

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "lemma3")


@dataclass(frozen=True)
class Theorem2Config:
    d: tuple = (16, 32, 64)
    phi: tuple = (0.0, 4.0, 8.0)
    trials: int = 10_000
    n: int = 64
    envelope: float = 5.0
    seed: int = 0
    output_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(v) for v in self.d))
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "theorem2")


@dataclass(frozen=True)
class GeneralConfig:
    """Topology experiment.

    ``topology`` is either an inline object (same keys as a topology file)
    or a path to a JSON topology file, resolved relative to the config.
    With ``c0_prime`` set, ``m`` is derived as
    ``ceil(3 * c0_prime * k * ln(width / k))`` instead of taken as given.
    """

    topology: object = None
    m: int = 60
    c0_prime: float = None
    rounds: int = 1
    k: int = 2
    magnitude: float = 100.0
    snr_db: float = 20.0
    noise: bool = True
    sigma: float = None
    error_tolerance: float = 0.05
    seeds: Seeds = field(default_factory=Seeds)
    solver: SolverOptions = field(default_factory=SolverOptions)
    output_dir: str = None

    def slots(self, width):
        if self.c0_prime is None:
            return int(self.m)
        k = min(self.k, width)
        return max(1, math.ceil(3 * self.c0_prime * k * math.log(width / k)))

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["seeds"] = _build(Seeds, data.get("seeds"), "seeds")
        data["solver"] = _build(SolverOptions, data.get("solver"), "solver")
        return _build(cls, data, "general")


def load_config(path, cls):
    with open(path) as fh:
        data = json.load(fh)
    return cls.from_dict(data)
