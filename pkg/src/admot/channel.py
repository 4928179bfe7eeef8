"""Channel states, sparsity measures and slotted noisy reception.

A channel state is a plain complex vector ``H`` of normalised gains
(``|H(i)|**2`` is the link SNR).  One slot is one symbol is one sample.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError

__all__ = ["VariationModel", "NoiseModel", "sparsity_distance",
           "is_sparse_variation", "evolve_state", "initial_state",
           "transmit_round", "renormalize", "denormalize", "gains_at_snr",
           "sparse_variation", "write_state_csv", "read_state_csv",
           "write_observation_csv"]


@dataclass(frozen=True)
class VariationModel:
    """Per-round random walk of the channel state.

    With probability ``stability_percent / 100`` an entry moves by a
    uniform draw from ``small_range`` (independently for the real and
    imaginary part), otherwise by a draw from ``large_range``.
    """

    stability_percent: float
    small_range: tuple = (-10.0, 10.0)
    large_range: tuple = (-250.0, 250.0)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.stability_percent <= 100:
            raise InvalidParameterError("stability_percent must be in [0, 100]")
        for lo, hi in (self.small_range, self.large_range):
            if lo > hi:
                raise InvalidParameterError(f"range ({lo}, {hi}) is not ordered")


@dataclass(frozen=True)
class NoiseModel:
    enabled: bool = True


def _as_state(H):
    H = np.asarray(H, dtype=complex)
    if H.ndim != 1:
        raise InvalidDimensionError("channel state must be a vector")
    if not np.all(np.isfinite(H)):
        raise InvalidParameterError("channel state has non-finite entries")
    return H


def sparsity_distance(V, k):
    """l1 norm of ``V`` once its ``k`` largest-magnitude entries are zeroed.

    Ties are resolved by keeping the lowest indices; the value does not
    depend on the rule.
    """
    V = np.asarray(V, dtype=float)
    n = V.size
    if not 0 <= k <= n:
        raise InvalidParameterError(f"k must be in [0, {n}], got {k}")
    if k == 0:
        return float(np.abs(V).sum())
    order = np.argsort(-np.abs(V), kind="stable")
    return float(np.abs(V[order[k:]]).sum())


def is_sparse_variation(H, H_hat, k, eps):
    """True iff ``H - H_hat`` is (k, eps)-sparse in both real and imaginary parts."""
    H, H_hat = np.asarray(H, dtype=complex), np.asarray(H_hat, dtype=complex)
    if H.shape != H_hat.shape:
        raise InvalidDimensionError(f"lengths differ: {H.shape} vs {H_hat.shape}")
    D = H - H_hat
    return (sparsity_distance(D.real, k) <= eps
            and sparsity_distance(D.imag, k) <= eps)


def _variation(n, model, rng):
    small = rng.random(n) < model.stability_percent / 100.0
    lo = np.where(small, model.small_range[0], model.large_range[0])
    hi = np.where(small, model.small_range[1], model.large_range[1])
    re = rng.uniform(lo, hi)
    im = rng.uniform(lo, hi)
    return re + 1j * im, ~small


def evolve_state(H, model, rng=None, return_mask=False):
    """``H + Delta`` with ``Delta`` drawn from ``model``.

    ``rng`` defaults to a generator seeded with ``model.seed``.  With
    ``return_mask`` the boolean mask of large-range draws is returned too.
    """
    H = _as_state(H)
    rng = np.random.default_rng(model.seed) if rng is None else rng
    delta, large = _variation(H.size, model, rng)
    if return_mask:
        return H + delta, large
    return H + delta


def initial_state(n, model, rng=None):
    """Starting state: one large-range draw per entry."""
    rng = np.random.default_rng(model.seed) if rng is None else rng
    lo, hi = model.large_range
    return rng.uniform(lo, hi, n) + 1j * rng.uniform(lo, hi, n)


def transmit_round(phi_m, H, noise=NoiseModel(), rng=None):
    """Received samples ``Y(s) = sum_i phi_m[s, i] H(i) + Z(s)``.

    Noise has independent standard normal real and imaginary parts and is
    drawn slot by slot (real then imaginary) from ``rng``, so the noise of
    slot ``s`` does not depend on how many slots are sent.
    """
    phi_m = np.asarray(phi_m)
    H = _as_state(H)
    if phi_m.ndim != 2 or phi_m.shape[1] != H.size:
        raise InvalidDimensionError(
            f"probe slice {phi_m.shape} does not match state of length {H.size}")
    Y = phi_m @ H
    if noise.enabled:
        if rng is None:
            raise InvalidParameterError("noise enabled but no rng given")
        z = rng.standard_normal((phi_m.shape[0], 2))
        Y = Y + (z[:, 0] + 1j * z[:, 1])
    return Y


def renormalize(G, P, sigma):
    """Physical gains to normalised gains: ``H = G sqrt(P) / sigma``."""
    if P <= 0 or sigma <= 0:
        raise InvalidParameterError("P and sigma must be positive")
    return np.asarray(G, dtype=complex) * np.sqrt(P) / sigma


def denormalize(H, P, sigma):
    """Inverse of :func:`renormalize`: ``G = sigma H / sqrt(P)``."""
    if P <= 0 or sigma <= 0:
        raise InvalidParameterError("P and sigma must be positive")
    return np.asarray(H, dtype=complex) * sigma / np.sqrt(P)


def gains_at_snr(n, snr_db, rng):
    """Normalised gains of magnitude ``sqrt(SNR)`` with uniform random phase."""
    amp = 10.0 ** (snr_db / 20.0)
    return amp * np.exp(1j * rng.uniform(-np.pi, np.pi, n))


def sparse_variation(n, k, magnitude, rng):
    """``k`` entries with real and imaginary parts ``+-magnitude``, rest zero."""
    delta = np.zeros(n, dtype=complex)
    idx = rng.choice(n, size=k, replace=False)
    signs = rng.choice([-1.0, 1.0], size=(k, 2))
    delta[idx] = magnitude * (signs[:, 0] + 1j * signs[:, 1])
    return delta


def _fmt(v):
    return repr(float(v))


def write_state_csv(H, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "re", "im"])
        for i, h in enumerate(np.asarray(H, dtype=complex), start=1):
            wr.writerow([i, _fmt(h.real), _fmt(h.imag)])


def read_state_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 1] + 1j * rows[:, 2]


def write_observation_csv(Y, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["slot", "re", "im"])
        for s, y in enumerate(np.asarray(Y, dtype=complex), start=1):
            wr.writerow([s, _fmt(y.real), _fmt(y.imag)])
