"""Deterministic random streams shared by every stochastic component.

All randomness in the package flows through :class:`Stream`, which is built
from a 64-bit key and produces a fully specified sequence:

* uniforms come from the Philox4x64 counter-based generator (keyed, stateless
  jumps, identical across platforms for a given key);
* normal variates use the trigonometric Box-Muller transform of consecutive
  uniform pairs (two uniforms in, two normals out, no rejection, no caching
  across calls);
* integer draws are ``floor(u * n)`` of one uniform;
* subset sampling is a partial Fisher-Yates shuffle.

Keeping these primitives explicit (instead of relying on library-internal
ziggurat/Lemire algorithms) pins the value streams, so equal seeds give
byte-identical datasets and runs, and a reimplementation in another language
can reproduce them.
"""

from __future__ import annotations

import hashlib
from typing import Sequence, TypeVar

import numpy as np

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


def derive_seed(seed: int, *tags: object) -> int:
    """Derive an independent 64-bit stream key from a seed and a tag path.

    SHA-256 over the canonical rendering ``"<seed>|tag1|tag2|..."``, truncated
    to the first 8 bytes (big-endian). Stable across runs and platforms.
    """
    text = "|".join([str(seed & _MASK64)] + [str(t) for t in tags])
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


class Stream:
    """A deterministic random stream keyed by a 64-bit integer."""

    def __init__(self, key: int):
        self.key = key & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.key))

    def spawn(self, *tags: object) -> "Stream":
        """Independent child stream addressed by ``tags``."""
        return Stream(derive_seed(self.key, *tags))

    # -- uniforms ---------------------------------------------------------

    def uniform01(self) -> float:
        """One uniform double in [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    # -- integers / subsets ----------------------------------------------

    def index(self, n: int) -> int:
        """Uniform integer in [0, n) via floor(u * n)."""
        if n <= 0:
            raise ValueError("index() needs n >= 1")
        return int(self.uniform01() * n)

    def sample_without_replacement(self, items: Sequence[T], count: int) -> list[T]:
        """Draw ``count`` distinct items by partial Fisher-Yates shuffle."""
        pool = list(items)
        n = len(pool)
        if count > n:
            raise ValueError(f"cannot draw {count} items from {n}")
        for i in range(count):
            j = i + self.index(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:count]

    def sample_with_replacement(self, items: Sequence[T], count: int) -> list[T]:
        return [items[self.index(len(items))] for _ in range(count)]

    # -- normals -----------------------------------------------------------

    def normals(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Standard normals via the Box-Muller transform.

        Consumes ceil(n/2) uniform pairs (u1, u2); u1 is mapped to (0, 1] as
        1 - u to keep log() finite. The trailing variate of the final pair is
        dropped when n is odd; nothing is cached between calls.
        """
        n = int(np.prod(shape))
        pairs = (n + 1) // 2
        u = self._gen.random((2, pairs))
        u1 = 1.0 - u[0]
        theta = 2.0 * np.pi * u[1]
        radius = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:n]
        return z.reshape(shape)


def xor_fold(base_seed: int, index: int) -> int:
    """Per-round seed: base XOR round index (both reduced to 64 bits)."""
    return (base_seed & _MASK64) ^ (index & _MASK64)
