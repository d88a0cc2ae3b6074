"""Philox4x32-10 counter-based generator, vectorized over counters.

Every random number used by the game is a pure function of
(seed, path, step, purpose, attempt), so results do not depend on batching,
on the order paths are processed in, or on how many paths run.  numpy's
bit generators are stateful streams and have no vectorized
counter -> output map, hence this small implementation.  It is checked
against the published Random123 known-answer vectors in the tests.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)

# purposes occupy the high half of counter word 1, attempts the low half
COIN, STEP_AXIAL, STEP_CROSS, STRATEGY = 0, 1, 2, 3


def philox4x32(counter: np.ndarray, key: np.ndarray, rounds: int = 10) -> np.ndarray:
    """Apply Philox4x32 to counters of shape (n, 4) with keys (2,) or (n, 2)."""
    c = np.asarray(counter, dtype=np.uint32)
    c0, c1, c2, c3 = (c[..., i].astype(np.uint64) for i in range(4))
    k = np.broadcast_to(np.asarray(key, dtype=np.uint32), c.shape[:-1] + (2,))
    k0 = k[..., 0].astype(np.uint32)
    k1 = k[..., 1].astype(np.uint32)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            p0 = _M0 * c0
            p1 = _M1 * c2
            hi0, lo0 = p0 >> _SHIFT, p0 & _MASK
            hi1, lo1 = p1 >> _SHIFT, p1 & _MASK
            c0, c1, c2, c3 = (hi1 ^ c1 ^ k0.astype(np.uint64), lo1,
                              hi0 ^ c3 ^ k1.astype(np.uint64), lo0)
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def seed_key(seed: int) -> np.ndarray:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint32)


def uniforms(seed: int, paths: np.ndarray, step: int, purpose: int, attempt: int = 0) -> np.ndarray:
    """Two uniforms in [0, 1) with 53 random bits each, per path: shape (n, 2)."""
    paths = np.asarray(paths, dtype=np.uint64)
    n = paths.size
    ctr = np.empty((n, 4), dtype=np.uint32)
    ctr[:, 0] = np.uint32(step & 0xFFFFFFFF)
    ctr[:, 1] = np.uint32(((purpose & 0xFFFF) << 16) | (attempt & 0xFFFF))
    ctr[:, 2] = (paths & _MASK).astype(np.uint32)
    ctr[:, 3] = (paths >> _SHIFT).astype(np.uint32)
    out = philox4x32(ctr, seed_key(seed)).astype(np.uint64)
    a = (out[:, [0, 2]] >> np.uint64(5)).astype(np.float64)
    b = (out[:, [1, 3]] >> np.uint64(6)).astype(np.float64)
    return (a * 67108864.0 + b) / 9007199254740992.0
