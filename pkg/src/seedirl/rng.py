"""Deterministic seed derivation.

Every stochastic component takes an explicit 64-bit seed. Child streams are
derived by XOR-folding a stream index into the parent seed and scrambling the
result with the SplitMix64 finalizer, so streams never overlap and runs are
bit-reproducible from a single master seed.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def split_seed(master: int, index: int) -> int:
    """Child seed for stream `index`: splitmix64(master XOR (index + 1))."""
    return splitmix64((master ^ (index + 1)) & _MASK64)


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & _MASK64)
