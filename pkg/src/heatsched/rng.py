"""Counter-based random streams.

Every consumer draws from a Philox stream keyed by ``(seed, purpose)`` and
positioned by an item index in the high counter word, so draw ``i`` never
depends on how many other items were drawn or in which order.
"""
import numpy as np

_MASK64 = (1 << 64) - 1

SAMPLING = 1
TRIVIAL = 2
FOREST = 3
SPLIT = 4


def stream(seed: int, index: int = 0, purpose: int = 0) -> np.random.Generator:
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (seed & _MASK64) | ((int(purpose) & _MASK64) << 64)
    bitgen = np.random.Philox(key=key, counter=[0, 0, 0, int(index) & _MASK64])
    return np.random.Generator(bitgen)
