"""Half-duplex monitoring with sources, relays and receivers.

Every listening node ``beta`` tracks the gains of the ``n + n''`` channels
into it (``n`` sources followed by ``n''`` relays).  A relay ``C_j``
transmits its probe symbol ``Phi(s, n+j)`` when it is nonzero and listens
otherwise, so with a ternary probe it hears about half the slots.  The
relay's own self-channel (coordinate ``n+j-1``, 0-based) is pinned to 0.
"""

import csv
import enum
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .bpdn import constrained_solve
from .channel import NoiseModel
from .core import SolverOptions, default_sigma, estimate
from .errors import (AdmotError, InfeasibleError, InvalidDimensionError,
                     InvalidParameterError, NoConvergenceError)
from .probe import Alphabet, ProbeMatrix, generate
from .streams import stream

__all__ = ["Duplex", "Topology", "NodeView", "GeneralResult",
           "build_node_views", "run_admot_general",
           "self_channel_constrained_solve", "read_topology",
           "write_node_results_csv", "relay_listen_counts"]

log = logging.getLogger(__name__)


class Duplex(str, enum.Enum):
    FULL = "full"
    HALF = "half"


@dataclass(frozen=True)
class Topology:
    """Node counts and duplex mode.

    Sources are ``S1..Sn``, relays ``C1..Cn''`` and receivers ``R1..Rn'``.
    Listening nodes are ordered receivers first, then relays; that order
    also fixes each node's noise stream index.
    """

    n_sources: int
    n_relays: int = 0
    n_receivers: int = 1
    duplex: Duplex = Duplex.HALF

    def __post_init__(self):
        if self.n_sources < 1 or self.n_relays < 0 or self.n_receivers < 0:
            raise InvalidParameterError("need >= 1 source and non-negative node counts")
        if self.n_relays + self.n_receivers < 1:
            raise InvalidParameterError("topology has no listening node")
        object.__setattr__(self, "duplex", Duplex(self.duplex))

    @property
    def width(self):
        """Length of every node state, ``n + n''``."""
        return self.n_sources + self.n_relays

    @property
    def sources(self):
        return [f"S{i}" for i in range(1, self.n_sources + 1)]

    @property
    def relays(self):
        return [f"C{j}" for j in range(1, self.n_relays + 1)]

    @property
    def receivers(self):
        return [f"R{j}" for j in range(1, self.n_receivers + 1)]

    @property
    def listeners(self):
        return self.receivers + self.relays

    def self_index(self, node):
        """0-based self-channel coordinate of relay ``node``, else ``None``."""
        if node.startswith("C"):
            return self.n_sources + int(node[1:]) - 1
        return None


@dataclass
class NodeView:
    """What node ``beta`` hears: its slots (0-based), rows and data."""

    node: str
    slots: np.ndarray
    phi: np.ndarray
    Y: np.ndarray = None
    D: np.ndarray = None

    @property
    def m_beta(self):
        return int(self.slots.size)

    @property
    def index_set(self):
        """1-based listening slots."""
        return [int(s) + 1 for s in self.slots]

    @property
    def slot_map(self):
        """Global slot (1-based) to row of ``phi`` (1-based)."""
        return {int(s) + 1: r + 1 for r, s in enumerate(self.slots)}


@dataclass
class GeneralResult:
    views: dict
    estimates: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)


def _entries(phi):
    if isinstance(phi, ProbeMatrix):
        return phi.entries, phi.alphabet
    return np.asarray(phi), None


def build_node_views(phi_m, topology):
    """Index sets and row slices for every listening node."""
    entries, alphabet = _entries(phi_m)
    if entries.ndim != 2 or entries.shape[1] != topology.width:
        raise InvalidDimensionError(
            f"probe has shape {entries.shape}, topology needs {topology.width} columns")
    if topology.duplex is Duplex.HALF and topology.n_relays:
        if alphabet is not None and alphabet is not Alphabet.TERNARY:
            raise InvalidParameterError("half-duplex relays need a ternary probe")
        if not np.isin(entries, (-1, 0, 1)).all():
            raise InvalidParameterError("probe entries outside {-1, 0, 1}")
    m = entries.shape[0]
    views = {}
    every = np.arange(m)
    for node in topology.receivers:
        views[node] = NodeView(node, every, entries)
    for node in topology.relays:
        if topology.duplex is Duplex.HALF:
            col = topology.self_index(node)
            slots = np.flatnonzero(entries[:, col] == 0)
        else:
            slots = every
        views[node] = NodeView(node, slots, entries[slots])
    return views


def run_admot_general(topology, phi_m, states, priors, noise=NoiseModel(), seed=0,
                      round_index=0, sigma=None, solver=SolverOptions()):
    """One ADMOT-GENERAL round.

    ``states`` and ``priors`` map each listening node to its true and prior
    length-``n+n''`` state.  Node ``beta``'s noise comes from
    ``stream(seed, "noise", round_index, k)`` with ``k`` its position in
    ``topology.listeners``; the stream yields one sample per slot, so the
    same slot always carries the same noise.  ``sigma=None`` uses
    ``sqrt(2 m_beta)``.  Solver failures are recorded per node.
    """
    entries, _ = _entries(phi_m)
    views = build_node_views(phi_m, topology)
    # a listening relay sends the symbol 0, so the probe rows are exactly
    # what is on the air in every slot
    x = entries.astype(float)
    m = x.shape[0]
    result = GeneralResult(views)
    for k, node in enumerate(topology.listeners):
        view = views[node]
        H = np.asarray(states[node], dtype=complex)
        H_hat = np.asarray(priors[node], dtype=complex)
        if H.size != topology.width or H_hat.size != topology.width:
            raise InvalidDimensionError(f"state of {node} must have {topology.width} entries")
        fixed = topology.self_index(node)
        if fixed is not None and H[fixed] != 0:
            raise InvalidParameterError(f"{node} self-channel gain must be 0")
        full = x @ H
        if noise.enabled:
            z = stream(seed, "noise", round_index, k).standard_normal((m, 2))
            full = full + (z[:, 0] + 1j * z[:, 1])
        view.Y = full[view.slots]
        if view.m_beta == 0:
            result.failures[node] = AdmotError(f"{node} listened in no slot")
            continue
        radius = default_sigma(view.m_beta) if sigma is None else float(sigma)
        try:
            est = estimate(view.Y, view.phi, H_hat, radius, solver, fixed_zero=fixed)
        except (InfeasibleError, NoConvergenceError) as exc:
            log.warning("node %s failed in round %d: %s", node, round_index, exc)
            result.failures[node] = exc
            continue
        view.D = est.D
        result.estimates[node] = est
    return result


def self_channel_constrained_solve(problem, fixed_zero_index):
    """BPDN with coordinate ``fixed_zero_index`` (0-based) held at zero."""
    return constrained_solve(problem, fixed_zero_index)


def read_topology(path):
    """Topology from JSON.

    Keys: ``sources``, ``relays``, ``receivers``, ``duplex`` and optional
    ``priors``: ``"generated"`` (default, drawn by the experiment),
    ``"zero"`` or a map node -> list of ``[re, im]`` pairs.
    Returns ``(topology, priors)`` with ``priors=None`` when generated.
    """
    with open(path) as fh:
        spec = json.load(fh)
    topo = Topology(int(spec["sources"]), int(spec.get("relays", 0)),
                    int(spec.get("receivers", 1)), spec.get("duplex", "half"))
    priors = spec.get("priors", "generated")
    if priors == "generated":
        return topo, None
    if priors == "zero":
        return topo, {b: np.zeros(topo.width, dtype=complex) for b in topo.listeners}
    out = {}
    for node in topo.listeners:
        vals = np.asarray(priors[node], dtype=float)
        if vals.shape != (topo.width, 2):
            raise InvalidDimensionError(f"prior of {node} must be {topo.width} [re, im] pairs")
        out[node] = vals[:, 0] + 1j * vals[:, 1]
    return topo, out


def write_node_results_csv(result, states, path):
    """Columns: node, m_beta, index, re_true, im_true, re_est, im_est, status."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", "m_beta", "index", "re_true", "im_true",
                     "re_est", "im_est", "status"])
        for node in sorted(result.views):
            view = result.views[node]
            H = np.asarray(states[node], dtype=complex)
            est = result.estimates.get(node)
            for i, h in enumerate(H, start=1):
                if est is None:
                    re, im, status = "", "", "failed"
                else:
                    e = est.h_star[i - 1]
                    re, im, status = repr(float(e.real)), repr(float(e.imag)), "ok"
                wr.writerow([node, view.m_beta, i, repr(float(h.real)),
                             repr(float(h.imag)), re, im, status])


def relay_listen_counts(seed, m, n_sources, n_relays, trials):
    """``m_beta`` of every relay over ``trials`` independent ternary probes.

    Returns an integer array of shape ``(trials, n_relays)``.
    """
    out = np.empty((trials, n_relays), dtype=int)
    for t in range(trials):
        key = int(np.random.SeedSequence([int(seed), t]).generate_state(1, np.uint64)[0])
        phi = generate(key, m, n_sources + n_relays, Alphabet.TERNARY)
        out[t] = (phi.entries[:, n_sources:] == 0).sum(axis=0)
    return out
