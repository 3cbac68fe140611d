"""Counter-based random streams.

``stream(seed, k)`` is a Philox4x64 generator whose 128-bit key is the
pair ``(seed mod 2**64, k mod 2**64)`` and whose counter starts at zero.
Distinct ``k`` therefore give independent, individually replayable
streams, and epoch ``k`` of a reshuffling run never depends on how many
numbers earlier epochs consumed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, k: int) -> np.random.Generator:
    key = np.array([int(seed) & _MASK64, int(k) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def fisher_yates(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform random permutation of ``range(n)``.

    Written out explicitly (rather than ``rng.permutation``) so the draw
    sequence is pinned down: the swap targets j_i, uniform on [0, i] for
    i = n-1 .. 1, are drawn in one vectorized ``integers`` call and then
    slot i is swapped with slot j_i in that order.
    """
    perm = list(range(n))
    if n > 1:
        highs = np.arange(n, 1, -1)
        targets = rng.integers(0, highs).tolist()
        for i, j in zip(range(n - 1, 0, -1), targets):
            perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)
