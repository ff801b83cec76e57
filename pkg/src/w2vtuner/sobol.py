"""Sobol low-discrepancy sequences via the Gray-code construction.

Direction numbers are the first 21 dimensions of the Joe-Kuo tables, which
covers the 5-d search space with room to spare. An optional digital-shift
scramble (per-dimension XOR mask) decorrelates candidate sets between
optimizer iterations while preserving dyadic stratification.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

__all__ = ["SobolSequence", "sobol_points", "MAX_DIM"]

_BITS = 32
_SCALE = float(2**_BITS)

# (degree s, coefficient a, [m_1..m_s]) for dimensions 2..21; dimension 1 is
# the van der Corput sequence (all m_i = 1).
_JOE_KUO = [
    (1, 0, [1]),
    (2, 1, [1, 3]),
    (3, 1, [1, 3, 1]),
    (3, 2, [1, 1, 1]),
    (4, 1, [1, 1, 3, 3]),
    (4, 4, [1, 3, 5, 13]),
    (5, 2, [1, 1, 5, 5, 17]),
    (5, 4, [1, 1, 5, 5, 5]),
    (5, 7, [1, 1, 7, 11, 19]),
    (5, 11, [1, 1, 5, 1, 1]),
    (5, 13, [1, 1, 1, 3, 11]),
    (5, 14, [1, 3, 5, 5, 31]),
    (6, 1, [1, 3, 3, 9, 7, 49]),
    (6, 13, [1, 1, 1, 15, 21, 21]),
    (6, 16, [1, 3, 1, 13, 27, 49]),
    (6, 19, [1, 1, 1, 15, 7, 5]),
    (6, 22, [1, 3, 1, 15, 13, 25]),
    (6, 25, [1, 1, 5, 5, 19, 61]),
    (7, 1, [1, 3, 7, 11, 23, 15, 103]),
    (7, 4, [1, 3, 7, 13, 13, 15, 69]),
]

MAX_DIM = len(_JOE_KUO) + 1


def _direction_integers(dim: int) -> np.ndarray:
    """(dim, 32) uint64 table of direction numbers scaled by 2**(32-k)."""
    v = np.zeros((dim, _BITS), dtype=np.uint64)
    v[0] = [1 << (_BITS - k) for k in range(1, _BITS + 1)]
    for j in range(1, dim):
        s, a, m = _JOE_KUO[j - 1]
        vj = [0] * _BITS
        for k in range(min(s, _BITS)):
            vj[k] = m[k] << (_BITS - k - 1)
        for k in range(s, _BITS):
            val = vj[k - s] ^ (vj[k - s] >> s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    val ^= vj[k - i]
            vj[k] = val
        v[j] = vj
    return v


def _first_zero_bit(n: int) -> int:
    """1-based index of the lowest zero bit of n."""
    c = 1
    while n & 1:
        n >>= 1
        c += 1
    return c


class SobolSequence:
    """Stateful generator; points can be consumed incrementally.

    With ``scramble_seed`` set, every emitted point is XOR-shifted by a
    per-dimension random mask (digital shift); the underlying sequence and
    its balance properties are unchanged.
    """

    def __init__(self, dim: int, scramble_seed: int | None = None):
        if dim < 1:
            raise ValidationError(f"dim must be >= 1, got {dim}")
        if dim > MAX_DIM:
            raise ValidationError(
                f"direction numbers available for dim <= {MAX_DIM}, got {dim}")
        self.dim = dim
        self._v = _direction_integers(dim)
        self._x = np.zeros(dim, dtype=np.uint64)
        self._count = 0
        if scramble_seed is None:
            self._shift = np.zeros(dim, dtype=np.uint64)
        else:
            rng = np.random.default_rng(scramble_seed)
            self._shift = rng.integers(0, 2**_BITS, size=dim, dtype=np.uint64)

    def take(self, count: int) -> np.ndarray:
        """The next ``count`` points as a (count, dim) float64 array in [0, 1)."""
        out = np.empty((count, self.dim), dtype=np.float64)
        for r in range(count):
            if self._count > 0:
                c = _first_zero_bit(self._count - 1)
                self._x ^= self._v[:, c - 1]
            out[r] = (self._x ^ self._shift).astype(np.float64) / _SCALE
            self._count += 1
        return out

    def skip(self, count: int) -> None:
        for _ in range(count):
            if self._count > 0:
                c = _first_zero_bit(self._count - 1)
                self._x ^= self._v[:, c - 1]
            self._count += 1


def sobol_points(dim: int, count: int, seed: int | None = None) -> np.ndarray:
    """First ``count`` points of a (optionally scrambled) Sobol sequence."""
    return SobolSequence(dim, scramble_seed=seed).take(count)
