"""Counter-based uniform draws (splitmix64 finaliser).

A draw is a pure function of ``(master seed, stream, trial, counter)`` so
Monte Carlo results do not depend on evaluation order or chunking.
"""

import numpy as np

from ._accel import njit

MASK64 = (1 << 64) - 1
_GOLDEN_INT = 0x9E3779B97F4A7C15
_M1_INT = 0xBF58476D1CE4E5B9
_M2_INT = 0x94D049BB133111EB

GOLDEN = np.uint64(_GOLDEN_INT)
M1 = np.uint64(_M1_INT)
M2 = np.uint64(_M2_INT)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _finalize_py(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1_INT) & MASK64
    z = ((z ^ (z >> 27)) * _M2_INT) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> np.uint64:
    """Key for one independent stream of a master seed."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    k = _finalize_py((seed & MASK64) + _GOLDEN_INT)
    k = _finalize_py((k ^ (stream & MASK64)) + _GOLDEN_INT)
    return np.uint64(k)


# -- scalar kernels (numba-compiled when enabled) --------------------------

@njit
def finalize(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit
def trial_key(key, t):
    return finalize((key ^ np.uint64(t)) + GOLDEN)


@njit
def uniform(tkey, counter):
    z = finalize(tkey + (np.uint64(counter) + np.uint64(1)) * GOLDEN)
    return float(z >> S11) * INV53


# -- vectorised equivalents ------------------------------------------------

def finalize_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


def trial_keys_np(key: np.uint64, start: int, stop: int) -> np.ndarray:
    t = np.arange(start, stop, dtype=np.uint64)
    return finalize_np((key ^ t) + GOLDEN)


def uniforms_np(tkeys: np.ndarray, n_draws: int) -> np.ndarray:
    """Uniform draws of shape ``(len(tkeys), n_draws)``; column c is counter c."""
    c = np.arange(1, n_draws + 1, dtype=np.uint64) * GOLDEN
    z = finalize_np(tkeys[:, None] + c[None, :])
    return (z >> S11).astype(np.float64) * INV53
