"""Multi-round monitoring, the minimal-``m`` sweep and topology runs."""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..adaptive import AdaptationPolicy, scan_and_update
from ..channel import (NoiseModel, VariationModel, evolve_state, gains_at_snr,
                       initial_state, renormalize, sparse_variation)
from ..core import (RoundConfig, SimulatedMedium, admot_round, estimate,
                    relative_error)
from ..errors import InfeasibleError, InvalidParameterError, NoConvergenceError
from ..general import Topology, run_admot_general
from ..probe import Alphabet, generate, row_slice
from ..streams import stream

__all__ = ["RoundRecord", "RoundLog", "run_monitoring_experiment",
           "signal_power", "ScalingPoint", "sweep_scaling",
           "success_fraction", "run_general_experiment"]

log = logging.getLogger(__name__)


@dataclass
class RoundRecord:
    round: int
    m: int
    cumulative_slots: int
    relative_error: float
    iterations: int
    next_m: int
    failed: bool = False
    steps: list = field(default_factory=list)
    residual_re: float = float("nan")
    residual_im: float = float("nan")
    wall_time: float = 0.0


@dataclass
class RoundLog:
    """Append-only per-round records of one monitoring run.

    ``states`` and ``estimates`` keep ``H[r]`` and ``H*[r]`` (normalised).
    """

    n: int
    stability: float
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    estimates: list = field(default_factory=list)

    def append(self, record, H, H_star):
        self.records.append(record)
        self.states.append(np.array(H))
        self.estimates.append(np.array(H_star))

    @property
    def slots(self):
        return np.array([r.m for r in self.records], dtype=int)

    @property
    def errors(self):
        return np.array([r.relative_error for r in self.records])

    def average_slots(self, skip_first=True):
        s = self.slots[1:] if skip_first else self.slots
        return float(s.mean()) if s.size else float("nan")


def signal_power(snr_db, initial_range):
    """Transmit power ``P`` (with unit noise std) so that the initial gains
    have mean ``|H|^2`` equal to the SNR.

    The initial draw is uniform on ``initial_range`` per part, so
    ``E|G|^2 = 2 * (hi^2 + hi lo + lo^2) / 3``.
    """
    lo, hi = initial_range
    power = 2.0 * (hi * hi + hi * lo + lo * lo) / 3.0
    if power == 0:
        raise InvalidParameterError("initial_range must not be [0, 0]")
    return 10.0 ** (snr_db / 10.0) / power


def run_monitoring_experiment(config, stability):
    """Rounds of monitoring at one stability value.

    Gains start from a uniform draw on ``initial_range``, evolve in
    physical units and are renormalised with ``P`` from
    :func:`signal_power` and unit noise std.  The prior starts at zero and
    is replaced by each round's estimate; ``m`` follows the hold-out scan.
    A failed round keeps the prior and doubles ``m``.  The solver radius is
    ``sqrt(2 m)`` unless ``config.sigma`` overrides it.
    """
    n = config.n
    phi = generate(config.seeds.probe, config.N, n, Alphabet.RADEMACHER)
    model = VariationModel(stability, config.small_range, config.large_range,
                           config.seeds.channel)
    P = signal_power(config.snr_db, config.initial_range)
    policy = AdaptationPolicy(config.phi_tol, config.m_min, config.N,
                              config.policy.initial_d, config.policy.growth,
                              config.policy.slack)
    noise = NoiseModel(config.noise)
    tag = int(round(stability * 100))
    start = VariationModel(stability, config.small_range, config.initial_range,
                           config.seeds.channel)
    G = initial_state(n, start, stream(config.seeds.channel, "channel", tag, 0))
    sigma = config.sigma
    H_hat = np.zeros(n, dtype=complex)
    m = policy.clamp(config.m_init)
    out = RoundLog(n, stability)
    total = 0
    for r in range(1, config.rounds + 1):
        t0 = time.perf_counter()
        G = evolve_state(G, model, stream(config.seeds.channel, "channel", tag, r))
        H = renormalize(G, P, 1.0)
        medium = SimulatedMedium(H, noise, stream(config.seeds.noise, "noise", tag, r))
        total += m
        try:
            res = admot_round(H_hat, phi, RoundConfig(m, sigma, config.solver, r),
                              medium)
        except NoConvergenceError as exc:
            log.warning("x=%g round %d failed: %s", stability, r, exc)
            nxt = policy.clamp(math.ceil(policy.growth * m))
            rec = RoundRecord(r, m, total, relative_error(H_hat, H), 0, nxt, True,
                              wall_time=time.perf_counter() - t0)
            out.append(rec, H, H_hat)
            m = nxt
            continue
        adapt = scan_and_update(res.Y, row_slice(phi, m), H_hat, policy, config.solver)
        rec = RoundRecord(r, m, total, relative_error(res.h_star, H), res.iterations,
                          adapt.next_m, False, adapt.steps,
                          res.solution_re.residual_norm, res.solution_im.residual_norm,
                          time.perf_counter() - t0)
        out.append(rec, H, res.h_star)
        log.info("x=%g round %d: m=%d err=%.4f next=%d", stability, r, m,
                 rec.relative_error, adapt.next_m)
        H_hat = res.h_star
        m = adapt.next_m
    return out


@dataclass
class ScalingPoint:
    k: int
    m_min: int
    ratio: float
    bracketed: bool = True


def _scaling_instance(config, k, trial):
    rng = stream(config.seed, "instance", k, trial)
    n = config.n
    H_hat = gains_at_snr(n, config.prior_snr_db, rng)
    H = H_hat + sparse_variation(n, k, config.magnitude, rng)
    key = int(np.random.SeedSequence([config.seed, k, trial]).generate_state(1, np.uint64)[0])
    phi = generate(key, n, n, Alphabet.RADEMACHER).entries
    return H_hat, H, phi


def success_fraction(config, k, m, instances=None):
    """Fraction of trials recovered to ``success_tolerance`` with ``m`` slots.

    Stops early once the target rate can no longer be met.
    """
    noisy = config.snr_db is not None
    allowed = config.trials - math.ceil(config.success_rate * config.trials)
    fails = 0
    for t in range(config.trials):
        H_hat, H, phi = instances[t] if instances else _scaling_instance(config, k, t)
        phi_m = phi[:m]
        Y = phi_m @ H
        if noisy:
            z = stream(config.seed, "noise", k, t).standard_normal((phi.shape[0], 2))[:m]
            Y = Y + z[:, 0] + 1j * z[:, 1]
        sigma = math.sqrt(2 * m) if noisy else 0.0
        try:
            est = estimate(Y, phi_m, H_hat, sigma, config.solver)
            ok = relative_error(est.h_star, H) <= config.success_tolerance
        except (InfeasibleError, NoConvergenceError):
            ok = False
        if not ok:
            fails += 1
            if fails > allowed:
                return (t + 1 - fails) / config.trials
    return (config.trials - fails) / config.trials


def sweep_scaling(config):
    """Bisect the smallest ``m`` meeting the success rate, for each ``k``.

    Each trial keeps one probe matrix and uses its prefixes, so success is
    (nearly) monotone in ``m``.  Returns a list of :class:`ScalingPoint`;
    ``m_min`` is ``None`` when even ``m = n`` fails.
    """
    n = config.n
    points = []
    for k in config.k:
        inst = [_scaling_instance(config, k, t) for t in range(config.trials)]

        def good(m):
            return success_fraction(config, k, m, inst) >= config.success_rate

        denom = k * math.log2((n + 1) / k)
        if not good(n):
            log.warning("k=%d: m=n=%d does not reach the success target", k, n)
            points.append(ScalingPoint(k, None, float("nan"), False))
            continue
        lo, hi = 0, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if good(mid):
                hi = mid
            else:
                lo = mid
        log.info("k=%d: m_min=%d", k, hi)
        points.append(ScalingPoint(k, hi, hi / denom))
    return points


def _node_states(config, topo, rng):
    """Priors at ``snr_db`` and true states with ``k`` varied entries."""
    priors, states = {}, {}
    width = topo.width
    for node in topo.listeners:
        prior = gains_at_snr(width, config.snr_db, rng)
        fixed = topo.self_index(node)
        free = [i for i in range(width) if i != fixed]
        k = min(config.k, len(free))
        delta = np.zeros(width, dtype=complex)
        delta[free] = sparse_variation(len(free), k, config.magnitude, rng)
        if fixed is not None:
            prior[fixed] = 0
        priors[node] = prior
        states[node] = prior + delta
    return priors, states


def run_general_experiment(config, topology, priors=None):
    """Rounds of ADMOT-GENERAL; returns ``[(states, result), ...]``."""
    if not isinstance(topology, Topology):
        raise TypeError("topology must be a Topology")
    alphabet = Alphabet.TERNARY if topology.n_relays else Alphabet.RADEMACHER
    phi = generate(config.seeds.probe, config.slots(topology.width), topology.width, alphabet)
    rounds = []
    for r in range(1, config.rounds + 1):
        rng = stream(config.seeds.channel, "topology", r)
        base, states = _node_states(config, topology, rng)
        use = base if priors is None else priors
        if priors is not None:
            # keep the drawn variation but apply it on top of the given priors
            states = {b: priors[b] + (states[b] - base[b]) for b in states}
        res = run_admot_general(topology, phi, states, use, NoiseModel(config.noise),
                                config.seeds.noise, r, config.sigma, config.solver)
        rounds.append((states, res))
    return rounds
