"""Counter-based splitmix64 helpers usable from numba kernels."""
import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_52 = 1.0 / 4503599627370496.0


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def stream_key(seed, a, b):
    """Independent 64-bit stream id for the tuple (seed, a, b)."""
    k = mix64(np.uint64(seed) + GOLDEN)
    k = mix64(k ^ (np.uint64(a) + GOLDEN))
    return mix64(k ^ (np.uint64(b) * GOLDEN + np.uint64(1)))


@njit(cache=True, inline="always")
def next_u64(state):
    state[0] += GOLDEN
    return mix64(state[0])


@njit(cache=True, inline="always")
def next_uniform(state):
    """Uniform draw on the open interval (0, 1)."""
    return (float(next_u64(state) >> np.uint64(12)) + 0.5) * INV_2_52


@njit(cache=True, inline="always")
def next_below(state, n):
    return min(int(next_uniform(state) * n), n - 1)
