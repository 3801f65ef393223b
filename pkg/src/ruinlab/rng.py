"""Counter-based random streams.

Every replication owns the Philox4x64-10 stream keyed by
``(master_seed, replication)``; block ``b`` of the stream is the cipher
applied to counter ``(b + 1, 0, 0, 0)``, so the words coincide with
``numpy.random.Philox(key=[seed, replication]).random_raw()``. Uniforms
are ``(word >> 11) * 2**-53``.

Because a sample is a pure function of (seed, replication, position) the
merged result of a parallel run does not depend on how replications were
distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["RngStream", "make_stream", "philox4x64", "derive_seed", "MASK64"]

MASK64 = (1 << 64) - 1
_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_INV53 = 2.0**-53


def philox4x64(c0: int, c1: int, c2: int, c3: int, k0: int, k1: int) -> tuple[int, int, int, int]:
    """Ten-round Philox4x64 block function."""
    for i in range(10):
        if i:
            k0 = (k0 + _W0) & MASK64
            k1 = (k1 + _W1) & MASK64
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> 64) ^ c1 ^ k0, p1 & MASK64, (p0 >> 64) ^ c3 ^ k1, p0 & MASK64
    return c0, c1, c2, c3


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, tag: int) -> int:
    """Independent master seed for an auxiliary family of streams."""
    return _splitmix64(_splitmix64(seed & MASK64) ^ (tag & MASK64))


@dataclass
class RngStream:
    """Sequential reader over one replication's Philox stream."""

    seed: int
    replication: int
    _block: int = field(default=0, repr=False)
    _buf: tuple = field(default=(), repr=False)
    _pos: int = field(default=4, repr=False)

    def __post_init__(self):
        self.seed &= MASK64
        self.replication &= MASK64

    def raw(self) -> int:
        if self._pos == 4:
            self._block += 1
            self._buf = philox4x64(self._block & MASK64, 0, 0, 0, self.seed, self.replication)
            self._pos = 0
        w = self._buf[self._pos]
        self._pos += 1
        return w

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.raw() >> 11) * _INV53

    def exponential(self, rate: float) -> float:
        return -math.log1p(-self.uniform()) / rate

    @property
    def position(self) -> int:
        """Number of words consumed so far."""
        return 4 * (self._block - 1) + self._pos if self._block else 0


def make_stream(master_seed: int, replication: int) -> RngStream:
    return RngStream(int(master_seed), int(replication))
