"""Continuous-time BPSK probing and matched filtering.

Transmitter ``i`` sends ``Phi(s, i)`` on carrier ``omega`` with a
rectangular pulse of one slot.  With ``H(i) = A_i exp(-j theta_i)`` the
receiver sees, within slot ``s``,

    y(t) = sum_i Phi(s, i) A_i cos(omega t - theta_i) + z(t),

and correlating against ``cos`` and ``sin`` (scaled by ``2/T``) yields the
two real channel views ``H_cos = A cos(theta)``, ``H_sin = A sin(theta)``.

Time is sampled at the slot midpoint grid ``t = (s-1)T + (k + 1/2) T/K``.
Noise is synthesised as i.i.d. samples of variance ``K/2``, which makes
the filter outputs exactly standard normal and mutually independent when
the carrier completes an integer number of cycles per slot.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import NoiseModel
from .errors import InvalidDimensionError, InvalidParameterError

__all__ = ["CarrierConfig", "PolarGains", "synthesize_received",
           "matched_filter", "recover_polar", "BpskMedium",
           "write_waveform_csv"]


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier and sampling set-up.

    Defaults give 100 carrier cycles per slot sampled 256 times, so the
    double-frequency products sum to zero on the grid.
    """

    omega: float = 2 * math.pi * 100.0
    T: float = 1.0
    samples_per_slot: int = 256
    min_cycles: float = 100.0

    def __post_init__(self):
        if self.T <= 0 or self.omega <= 0 or self.samples_per_slot < 2:
            raise InvalidParameterError("omega, T and samples_per_slot must be positive")
        if self.omega * self.T < self.min_cycles * 2 * math.pi:
            raise InvalidParameterError(
                f"omega*T = {self.omega * self.T:.4g} is below "
                f"{self.min_cycles:g} carrier cycles per slot")
        if self.cycles_per_slot >= self.samples_per_slot / 2:
            raise InvalidParameterError("carrier above the sampling Nyquist limit")

    @property
    def cycles_per_slot(self):
        return self.omega * self.T / (2 * math.pi)

    def times(self, m):
        K = self.samples_per_slot
        k = np.arange(m * K)
        return (k + 0.5) * (self.T / K)


@dataclass(frozen=True)
class PolarGains:
    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitude, dtype=float)
        if np.any(a < 0):
            raise InvalidParameterError("amplitudes must be non-negative")
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "phase", _wrap(np.asarray(self.phase, dtype=float)))

    @classmethod
    def from_complex(cls, H):
        """From ``H = A exp(-j theta)``."""
        H = np.asarray(H, dtype=complex)
        return recover_polar(H.real, -H.imag)

    def to_complex(self):
        return self.amplitude * np.exp(-1j * self.phase)

    @property
    def h_cos(self):
        return self.amplitude * np.cos(self.phase)

    @property
    def h_sin(self):
        return self.amplitude * np.sin(self.phase)


def _wrap(theta):
    theta = np.angle(np.exp(1j * theta))
    return np.where(theta <= -math.pi, math.pi, theta)


def synthesize_received(phi_m, gains, carrier=CarrierConfig(), noise=NoiseModel(False),
                        rng=None):
    """Sampled received waveform over ``m`` slots.

    Returns ``(t, y)``, each of length ``m * samples_per_slot``.
    """
    phi_m = np.asarray(phi_m, dtype=float)
    if phi_m.ndim != 2 or phi_m.shape[1] != gains.amplitude.size:
        raise InvalidDimensionError(
            f"probe slice {phi_m.shape} vs {gains.amplitude.size} transmitters")
    m = phi_m.shape[0]
    K = carrier.samples_per_slot
    t = carrier.times(m)
    wt = (carrier.omega * t).reshape(m, K)
    # per-slot in-phase and quadrature amplitudes of the superposition
    a_cos = phi_m @ gains.h_cos
    a_sin = phi_m @ gains.h_sin
    y = a_cos[:, None] * np.cos(wt) + a_sin[:, None] * np.sin(wt)
    y = y.ravel()
    if noise.enabled:
        if rng is None:
            raise InvalidParameterError("noise enabled but no rng given")
        y = y + rng.standard_normal(y.size) * math.sqrt(K / 2.0)
    return t, y


def matched_filter(y, carrier=CarrierConfig()):
    """Per-slot ``(2/T) int y cos(wt)`` and ``(2/T) int y sin(wt)`` (midpoint rule)."""
    y = np.asarray(y, dtype=float)
    K = carrier.samples_per_slot
    if y.ndim != 1 or y.size == 0 or y.size % K:
        raise InvalidDimensionError(
            f"{y.size} samples do not cover whole slots of {K} samples")
    m = y.size // K
    wt = (carrier.omega * carrier.times(m)).reshape(m, K)
    Y = y.reshape(m, K)
    scale = 2.0 / K
    return scale * (Y * np.cos(wt)).sum(axis=1), scale * (Y * np.sin(wt)).sum(axis=1)


def recover_polar(h_cos, h_sin):
    """Amplitude and quadrant-aware phase from the two real views."""
    h_cos = np.asarray(h_cos, dtype=float)
    h_sin = np.asarray(h_sin, dtype=float)
    amp = np.hypot(h_cos, h_sin)
    theta = np.where(amp > 0, np.arctan2(h_sin, h_cos), 0.0)
    return PolarGains(amp, theta)


class BpskMedium:
    """Medium returning ``Y_cos + j Y_sin`` so the complex round recovers
    ``H_cos + j H_sin``."""

    def __init__(self, gains, carrier=CarrierConfig(), noise=NoiseModel(), rng=None):
        self.gains = gains
        self.carrier = carrier
        self.noise = noise
        self.rng = rng
        self.last_waveform = None

    def probe(self, phi_m):
        t, y = synthesize_received(phi_m, self.gains, self.carrier, self.noise, self.rng)
        self.last_waveform = (t, y)
        y_cos, y_sin = matched_filter(y, self.carrier)
        return y_cos + 1j * y_sin


def write_waveform_csv(t, y, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["time", "value"])
        for ti, yi in zip(t, y):
            wr.writerow([repr(float(ti)), repr(float(yi))])
