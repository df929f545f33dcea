"""Counter-based random number generation.

Every variate consumed by the simulators is a pure function of
(seed, stream tag, index).  That gives three properties the ensemble
machinery relies on:

* replica i of an ensemble depends only on its own derived seed, never on
  how many replicas run or in which order;
* scalar (one trace at a time) and vectorized (many replicas at once)
  engines consume literally the same bits, so they can be tested for
  bit-for-bit agreement;
* results are reproducible across platforms (only 64-bit integer ops).

The generator is SplitMix64: output j of a stream with seed s is
``mix64(s + (j+1)*GOLDEN)``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Separate odd constant so stream tagging and in-stream stepping are
# independent mixing directions.
_STREAM_GOLDEN = 0xBB67AE8584CAA73B

# Stream tags (one sub-stream per kind of variate a replica consumes).
TAG_MARKOV = 0      # one draw per step of the direct Markov engine
TAG_VSTEP = 1       # vertical step signs of the decomposition engine
TAG_HSIGN = 2       # horizontal step signs of the decomposition engine
TAG_GRUN = 3        # geometric run lengths of the decomposition engine
TAG_GAUSS = 4       # Gaussian increments of Brownian paths

_U = np.uint64


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (64-bit wrapping)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer; consumes/returns uint64 arrays."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _U(30)
    z *= _U(_MIX1)
    z ^= z >> _U(27)
    z *= _U(_MIX2)
    z ^= z >> _U(31)
    return z


def draw_at(seed: int, index: int) -> int:
    """Output number `index` (0-based) of the stream with the given seed."""
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


def draws_at(seed: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized draw_at for an array (any shape) of draw indices."""
    z = indices.astype(np.uint64) * _U(GOLDEN)
    z += _U((seed + GOLDEN) & MASK64)
    return mix64_array(z)


def split_seed(master_seed: int, replica_index: int) -> int:
    """Derive the seed of one replica from the ensemble master seed."""
    return draw_at(master_seed & MASK64, replica_index)


def split_seeds(master_seed: int, n: int, start: int = 0) -> np.ndarray:
    """Seeds of replicas start..start+n-1 as a uint64 array."""
    return draws_at(master_seed & MASK64, np.arange(start, start + n, dtype=np.uint64))


def stream_seed(seed: int, tag: int) -> int:
    """Seed of sub-stream `tag` of a replica stream."""
    return mix64((seed + (tag + 1) * _STREAM_GOLDEN) & MASK64)


def stream_seeds(seeds: np.ndarray, tag: int) -> np.ndarray:
    """Vectorized stream_seed over an array of replica seeds."""
    z = seeds.astype(np.uint64) + _U(((tag + 1) * _STREAM_GOLDEN) & MASK64)
    return mix64_array(z)


def u64_to_unit(z: np.ndarray) -> np.ndarray:
    """Map uint64 words to floats in the open interval (0, 1)."""
    return ((z >> _U(11)).astype(np.float64) + 0.5) * 2.0**-53


def leading_zeros(z: np.ndarray) -> np.ndarray:
    """Count of leading zero bits per uint64 word (0..64), vectorized.

    For a uniform word this count is geometric on {0,1,2,...} with
    P(k) = 2^-(k+1), the run-length law of the decomposition engine.
    (The mass beyond 63 is collapsed onto 64, an event of probability
    2^-64 with no observable effect at any feasible run length.)
    """
    z = z.astype(np.uint64, copy=True)
    for s in (1, 2, 4, 8, 16, 32):
        z |= z >> _U(s)
    return (_U(64) - np.bitwise_count(z)).astype(np.int64)


def leading_zeros_scalar(z: int) -> int:
    return 64 - int(z).bit_length()


def gaussian_generator(seed: int, tag: int = TAG_GAUSS) -> np.random.Generator:
    """Counter-based generator for bulk Gaussian draws (Brownian paths).

    Philox is keyed by (seed, tag), so distinct paths and distinct stream
    tags get independent streams with no sequential coupling.
    """
    key = np.array([seed & MASK64, tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class RngStream:
    """Sequential view of one counter-based stream.

    Identical seed gives an identical draw sequence on every platform;
    the stream position is explicit so engines can account for exactly
    which variate fed which decision.
    """

    def __init__(self, seed: int, position: int = 0):
        self.seed = seed & MASK64
        self.position = position

    def next_u64(self) -> int:
        z = draw_at(self.seed, self.position)
        self.position += 1
        return z

    def next_uniform(self) -> float:
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        idx = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        return u64_to_unit(draws_at(self.seed, idx))
