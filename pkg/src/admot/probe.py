"""Keyed, column-addressable training matrices.

Column ``i`` (transmitter ``S_i``, 1-based) is drawn from a Philox-4x64
counter-mode stream keyed by ``(seed, i)``.  Any node that knows the
seed can therefore compute its own column without the rest of the matrix,
and adding transmitters never changes existing columns.

Symbol mapping from the raw little-endian bit stream:

* RADEMACHER, one bit per entry: ``0 -> -1``, ``1 -> +1``.
* TERNARY, two bits per entry ``(b0, b1)``: ``b0 == 0 -> 0``,
  ``(1, 0) -> -1``, ``(1, 1) -> +1``; probabilities 1/2, 1/4, 1/4.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, SliceOverflowError

__all__ = ["Alphabet", "ProbeMatrix", "generate", "generate_column",
           "row_slice", "column", "GENERATOR_NAME"]

GENERATOR_NAME = "philox4x64-10"
_SEED_MASK = (1 << 64) - 1


class Alphabet(str, enum.Enum):
    RADEMACHER = "rademacher"
    TERNARY = "ternary"


def _stream_bits(seed, i, nbits):
    key = np.array([seed & _SEED_MASK, i], dtype=np.uint64)
    words = np.random.Philox(key=key).random_raw((nbits + 63) // 64)
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nbits]


def generate_column(seed, i, N, alphabet=Alphabet.RADEMACHER):
    """Column ``i`` (1-based) of the ``N``-row matrix keyed by ``seed``."""
    alphabet = Alphabet(alphabet)
    if N < 1:
        raise InvalidDimensionError(f"N must be positive, got {N}")
    if i < 1:
        raise InvalidDimensionError(f"column index is 1-based, got {i}")
    if alphabet is Alphabet.RADEMACHER:
        bits = _stream_bits(seed, i, N).astype(np.int8)
        return 2 * bits - 1
    bits = _stream_bits(seed, i, 2 * N).reshape(N, 2).astype(np.int8)
    return bits[:, 0] * (2 * bits[:, 1] - 1)


@dataclass(frozen=True)
class ProbeMatrix:
    seed: int
    alphabet: Alphabet
    entries: np.ndarray

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def metadata(self):
        return {"seed": self.seed, "alphabet": self.alphabet.value,
                "N": self.rows, "n": self.cols, "generator": GENERATOR_NAME}

    def to_csv(self, path):
        """Integer entries, one row per line, after a ``#`` metadata line."""
        meta = ",".join(f"{k}={v}" for k, v in self.metadata().items())
        with open(path, "w", newline="") as fh:
            fh.write(f"# {meta}\n")
            for row in self.entries:
                fh.write(",".join(str(int(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            head = fh.readline()
            meta = dict(kv.split("=", 1) for kv in head[1:].strip().split(","))
            entries = np.loadtxt(fh, delimiter=",", dtype=np.int8, ndmin=2)
        return cls(int(meta["seed"]), Alphabet(meta["alphabet"]), entries)


def generate(seed, N, n, alphabet=Alphabet.RADEMACHER):
    """Build the full ``N x n`` training matrix for ``seed``."""
    if N < 1 or n < 1:
        raise InvalidDimensionError(f"N and n must be positive, got N={N}, n={n}")
    alphabet = Alphabet(alphabet)
    entries = np.empty((N, n), dtype=np.int8)
    for i in range(1, n + 1):
        entries[:, i - 1] = generate_column(seed, i, N, alphabet)
    entries.setflags(write=False)
    return ProbeMatrix(int(seed), alphabet, entries)


def row_slice(phi, m):
    """First ``m`` rows (the probes sent in a round of ``m`` slots)."""
    if m < 1:
        raise InvalidDimensionError(f"m must be positive, got {m}")
    if m > phi.rows:
        raise SliceOverflowError(f"asked for {m} rows of a {phi.rows}-row matrix")
    return phi.entries[:m]


def column(phi, i):
    """Training column of transmitter ``i`` (1-based), recomputed from the key."""
    if not 1 <= i <= phi.cols:
        raise InvalidDimensionError(f"column index {i} outside 1..{phi.cols}")
    return generate_column(phi.seed, i, phi.rows, phi.alphabet)
