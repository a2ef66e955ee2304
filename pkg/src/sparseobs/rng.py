"""Counter-based normal variates keyed by (seed, observation, particle, step).

Each particle owns a stream addressed purely by its key, so the noise a
particle sees never depends on how work is split across threads. The
generator is Philox4x32-10 (Salmon et al., SC'11); one block of four 32-bit
words is turned into a pair of standard normals with the Box-Muller map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, nogil=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32 on a counter/key held in uint64 slots."""
    c0 = np.uint64(c0) & _MASK
    c1 = np.uint64(c1) & _MASK
    c2 = np.uint64(c2) & _MASK
    c3 = np.uint64(c3) & _MASK
    k0 = np.uint64(k0) & _MASK
    k1 = np.uint64(k1) & _MASK
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT
        lo0 = p0 & _MASK
        hi1 = p1 >> _SHIFT
        lo1 = p1 & _MASK
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True, inline="always")
def normal_pair(key_lo, key_hi, obs, particle, step):
    """Two independent N(0, 1) variates for one (obs, particle, step) counter."""
    a, b, c, d = philox4x32(step, particle, obs, 0, key_lo, key_hi)
    # 53-bit uniforms on [0, 1); the first is reflected into (0, 1] for the log
    u1 = ((a >> np.uint64(5)) * np.uint64(67108864) + (b >> np.uint64(6))) * _INV_2_53
    u2 = ((c >> np.uint64(5)) * np.uint64(67108864) + (d >> np.uint64(6))) * _INV_2_53
    r = math.sqrt(-2.0 * math.log(1.0 - u1))
    return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)


@nb.njit(cache=True, nogil=True)
def _fill_normals(key_lo, key_hi, obs, particles, steps, out):
    for i in range(particles.shape[0]):
        for s in range(steps.shape[0]):
            z0, z1 = normal_pair(key_lo, key_hi, obs, particles[i], steps[s])
            out[i, s, 0] = z0
            out[i, s, 1] = z1


def split_seed(seed: int) -> tuple[int, int]:
    """Split a 64-bit seed into the two 32-bit Philox key words."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


@dataclass(frozen=True)
class StreamKey:
    """Address of one particle's noise stream."""

    seed: int
    obs_index: int
    particle_index: int

    def __post_init__(self):
        if self.obs_index < 0 or self.particle_index < 0:
            raise ValueError("stream indices must be nonnegative")

    def normals(self, n_steps: int, start: int = 0) -> np.ndarray:
        """The first ``n_steps`` noise draws of this stream, shape (n_steps, 2)."""
        return stream_normals(
            self.seed, self.obs_index, [self.particle_index], np.arange(start, start + n_steps)
        )[0]


def stream_normals(seed, obs_index, particles, steps) -> np.ndarray:
    """Noise draws for many particles and steps of one observation.

    Returns an array of shape ``(len(particles), len(steps), 2)``.
    """
    particles = np.atleast_1d(np.asarray(particles, dtype=np.int64))
    steps = np.atleast_1d(np.asarray(steps, dtype=np.int64))
    out = np.empty((particles.size, steps.size, 2))
    lo, hi = split_seed(seed)
    _fill_normals(lo, hi, int(obs_index), particles, steps, out)
    return out
