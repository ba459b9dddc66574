"""Seeded random substreams that are stable across machines and Python versions.

The stdlib random module does not guarantee identical draw sequences for
every method across interpreter releases, and the pipeline promises
byte-identical artifacts for a fixed seed. Substreams are derived from
(seed, name) by hashing a counter with SHA-256, so each pipeline stage
draws from its own stream and inserting a new consumer never shifts the
draws of existing ones.
"""

from __future__ import annotations

import hashlib
import struct


class Substream:
    """Deterministic random stream identified by (seed, name)."""

    def __init__(self, seed: int, name: str):
        self._prefix = f"{seed}:{name}:".encode("utf-8")
        self._counter = 0

    def _block(self) -> bytes:
        digest = hashlib.sha256(self._prefix + str(self._counter).encode("ascii")).digest()
        self._counter += 1
        return digest

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        (value,) = struct.unpack(">Q", self._block()[:8])
        return (value >> 11) / float(1 << 53)

    def coin(self) -> bool:
        return self.random() < 0.5

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        return int(self.random() * n) % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order randomized."""
        if k > n:
            raise ValueError(f"cannot sample {k} from {n}")
        pool = list(range(n))
        self.shuffle(pool)
        return pool[:k]
