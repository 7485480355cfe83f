"""
Deterministic pseudo-random source: xoshiro256** seeded through splitmix64.

Everything stochastic in the package (weight init, latent draws, shuffling,
pair sampling, toy data) draws from this generator so runs are reproducible
bit for bit from a single integer seed.
"""
import math

import numpy as np

_MASK64 = (1 << 64) - 1


def _rotl(value: int, shift: int) -> int:
    return ((value << shift) | (value >> (64 - shift))) & _MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (output, next state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


class Rng:
    """xoshiro256** generator with a 256-bit state expanded from a 64-bit seed."""

    def __init__(self, seed: int):
        state = int(seed) & _MASK64
        words = []
        for _ in range(4):
            word, state = splitmix64(state)
            words.append(word)
        self._s = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def _fill(self, count: int) -> list[int]:
        # inlined generator loop; this is the hot path for latent draws
        s0, s1, s2, s3 = self._s
        out = [0] * count
        mask = _MASK64
        for i in range(count):
            x = (s1 * 5) & mask
            out[i] = ((((x << 7) | (x >> 57)) & mask) * 9) & mask
            t = (s1 << 17) & mask
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = ((s3 << 45) | (s3 >> 19)) & mask
        self._s = [s0, s1, s2, s3]
        return out

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, size, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        count = int(np.prod(size))
        bits = np.array(self._fill(count), dtype=np.uint64) >> np.uint64(11)
        unit = bits.astype(np.float64) * (1.0 / (1 << 53))
        return (low + (high - low) * unit).reshape(size)

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection."""
        if bound < 1:
            raise ValueError(f"Error! Bound must be positive, got {bound}.")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % bound

    def normal(self, size, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Gaussian samples via the Box-Muller transform."""
        count = int(np.prod(size))
        n_pairs = (count + 1) // 2
        unit = self.uniform(2 * n_pairs)
        # 1 - u keeps the logarithm argument in (0, 1]
        radius = np.sqrt(-2.0 * np.log(1.0 - unit[:n_pairs]))
        angle = 2.0 * math.pi * unit[n_pairs:]
        samples = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:count]
        return (mean + std * samples).reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n)."""
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            order[i], order[j] = order[j], order[i]
        return np.asarray(order, dtype=np.int64)

    def spawn_seed(self) -> int:
        """Derive a child seed from the stream."""
        return self.next_u64()
