"""Deterministic derivation of child seeds from a master seed.

``mix_seed(seed, index)`` offsets the seed by ``(index + 1)`` golden-ratio
increments and passes the sum through the splitmix64 finalizer, giving
well-separated 64-bit streams for consecutive indices.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(seed: int, index: int) -> int:
    return splitmix64((seed & MASK64) + ((index + 1) * GOLDEN))


# stream indices reserved for pipeline stages other than shuffles
SUBSET_STREAM = 1 << 32
SVM_STREAM = (1 << 32) + 1
