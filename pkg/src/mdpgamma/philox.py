"""Philox4x32-10 counter-based generator (Salmon et al., SC'11), vectorised over counters.

numpy ships Philox4x64 as a sequential bit generator, but the rollout oracle
needs random-access draws ``f(seed, sample, step)`` evaluated for thousands
of samples at once, so the block function is exposed directly here.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
ROUNDS = 10


def philox4x32(counter, key, rounds: int = ROUNDS):
    """Apply the Philox4x32 bijection.

    ``counter`` is a sequence of four arrays (or ints) of 32-bit words,
    ``key`` a pair of 32-bit ints. Returns four uint64 arrays holding the
    32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT, p0 & _MASK
        hi1, lo1 = p1 >> _SHIFT, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ np.uint64(k0), lo1, hi0 ^ c3 ^ np.uint64(k1), lo0
    return c0, c1, c2, c3


def to_unit_double(hi, lo):
    """Combine two 32-bit words into a double uniform on [0, 1) with 53 random bits."""
    a = np.asarray(hi, dtype=np.uint64) >> np.uint64(5)
    b = np.asarray(lo, dtype=np.uint64) >> np.uint64(6)
    return (a.astype(np.float64) * 67108864.0 + b.astype(np.float64)) * (1.0 / 9007199254740992.0)


def split_seed(seed: int) -> tuple[int, int]:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed: int, sample, step, lane: int = 0):
    """Two independent uniforms per (sample, step, lane) for one seed.

    The counter is (sample low word, sample high word, step, lane); the key
    is the 64-bit seed. Every draw is a pure function of its coordinates.
    """
    sample = np.asarray(sample, dtype=np.uint64)
    w = philox4x32(
        (sample & _MASK, sample >> _SHIFT, np.broadcast_to(np.uint64(step), sample.shape), np.full(sample.shape, lane, dtype=np.uint64)),
        split_seed(seed),
    )
    return to_unit_double(w[0], w[1]), to_unit_double(w[2], w[3])
