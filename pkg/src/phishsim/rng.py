"""Counter-based random streams with deterministic derivation.

Every stochastic consumer in the package draws from a :class:`RandomStream`.
A stream is a Philox4x64 counter-based generator whose key comes from
``numpy.random.SeedSequence(master_seed, spawn_key=path)``, where ``path``
is a tuple of non-negative integers (for a campaign: the replication index).
Two streams with the same ``(master_seed, path)`` produce identical uniforms
on every platform, and streams with different paths are independent, so
replications can run in any order or on any worker.

Uniforms are pulled from the generator in blocks. Philox emits doubles
sequentially, so the block size never changes the sequence, only the number
of Python calls.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 256


class RandomStream:
    """One reproducible stream of uniforms on [0, 1).

    Args:
        seed: master seed, a 64-bit unsigned integer.
        *path: integers identifying the sub-stream (e.g. replication index).
    """

    __slots__ = ("seed", "path", "_gen", "_buf", "_pos", "_drawn")

    def __init__(self, seed: int, *path: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf = np.empty(0)
        self._pos = 0
        self._drawn = 0

    def random(self) -> float:
        """Next uniform draw."""
        if self._pos >= self._buf.shape[0]:
            self._buf = self._gen.random(_BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self._drawn += 1
        return float(u)

    uniform = random

    @property
    def draws(self) -> int:
        """Number of uniforms consumed so far."""
        return self._drawn

    def spawn(self, *path: int) -> "RandomStream":
        """Child stream at ``self.path + path``."""
        return RandomStream(self.seed, *self.path, *path)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path}, draws={self._drawn})"
