"""Monte Carlo checks of the noise-norm and hold-out tail bounds."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..adaptive import thresholds
from ..streams import stream

__all__ = ["Lemma3Result", "validate_lemma3", "chi2_sf_quad",
           "Theorem2Row", "validate_theorem2", "noise_bound",
           "holdout_bound", "nonincreasing_in_d"]


def noise_bound(m):
    """``exp(-0.15 m)``."""
    return math.exp(-0.15 * m)


def holdout_bound(d, envelope=5.0):
    return envelope * math.exp(-0.15 * d)


@dataclass
class Lemma3Result:
    m: int
    trials: int
    frequency: float
    bound: float
    oracle: float

    @property
    def within_bound(self):
        return self.frequency <= self.bound


def _chi2_logpdf(x, k):
    h = 0.5 * k
    return (h - 1.0) * math.log(x) - 0.5 * x - h * math.log(2.0) - math.lgamma(h)


def chi2_sf_quad(x, k):
    """``Pr(chi2_k > x)`` by adaptive quadrature of the density."""
    val, _ = integrate.quad(lambda t: math.exp(_chi2_logpdf(t, k)), x, math.inf,
                            epsabs=1e-14, epsrel=1e-10, limit=200)
    return val


def validate_lemma3(m, trials, seed=0, chunk=20_000):
    """Frequency of ``||Z||_2^2 > 2m`` for ``Z`` with ``m`` i.i.d. unit normals."""
    rng = stream(seed, "trial", 3, m)
    hits = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        z = rng.standard_normal((b, m))
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", z, z) > 2 * m))
        done += b
    return Lemma3Result(m, trials, hits / trials, noise_bound(m), chi2_sf_quad(2 * m, m))


@dataclass
class Theorem2Row:
    d: int
    phi: float
    trials: int
    upper: float
    lower: float
    freq_upper: float
    freq_lower: float
    bound: float

    @property
    def passed(self):
        low_ok = self.lower is None or self.freq_lower <= self.bound
        return self.freq_upper <= self.bound and low_ok


def validate_theorem2(ds, phis, trials, n=64, seed=0, envelope=5.0, chunk=2000):
    """Threshold violation frequencies of the hold-out statistic.

    Each trial draws fresh Rademacher hold-out rows, fresh noise and a
    fresh dense error ``H - H*_t`` with ``||.||_2 = phi``; the statistic is
    ``||Phi_2 (H - H*_t) + Z_2||^2``, which is what the receiver computes.
    """
    rows = []
    for d in ds:
        for phi in phis:
            rng = stream(seed, "trial", 2, d, int(round(phi * 1000)))
            upper, lower = thresholds(d, phi)
            above = below = 0
            done = 0
            while done < trials:
                b = min(chunk, trials - done)
                sign = 2 * rng.integers(0, 2, size=(b, d, n), dtype=np.int8) - 1
                e = rng.standard_normal((b, n)) + 1j * rng.standard_normal((b, n))
                e *= (phi / np.linalg.norm(e, axis=1))[:, None]
                z = rng.standard_normal((b, d)) + 1j * rng.standard_normal((b, d))
                r = np.einsum("bdn,bn->bd", sign, e) + z
                stat = np.sum(r.real ** 2 + r.imag ** 2, axis=1)
                above += int(np.count_nonzero(stat > upper))
                if lower is not None:
                    below += int(np.count_nonzero(stat < lower))
                done += b
            rows.append(Theorem2Row(d, phi, trials, upper, lower, above / trials,
                                    below / trials, holdout_bound(d, envelope)))
    return rows


def nonincreasing_in_d(rows):
    """For each ``phi``, violation frequencies do not grow as ``d`` grows."""
    ok = True
    for phi in sorted({r.phi for r in rows}):
        sel = sorted((r for r in rows if r.phi == phi), key=lambda r: r.d)
        for a, b in zip(sel, sel[1:]):
            ok &= b.freq_upper <= a.freq_upper and b.freq_lower <= a.freq_lower
    return ok
