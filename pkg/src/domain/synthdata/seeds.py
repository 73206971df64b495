"""Splittable counter-based randomness.

Every consumer draws from its own Philox stream keyed by ``(root seed, consumer name)``;
the key is the root seed as entropy and the UTF-8 bytes of the name as spawn key, so
adding a consumer never shifts another consumer's draws. Gaussian variates use the
Marsaglia polar method on the stream's uniform doubles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def philox_generator(seed: int, name: str) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(name.encode("utf-8")))
    return np.random.Generator(np.random.Philox(sequence))


def polar_normal(rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
    shape = (size,) if isinstance(size, int) else tuple(size)
    count = int(np.prod(shape, dtype=np.int64))
    out = np.empty(count)
    filled = 0
    while filled < count:
        pairs = max(8, (count - filled + 1) // 2 + 8)
        u = rng.random((pairs, 2)) * 2.0 - 1.0
        s = np.sum(u * u, axis=1)
        keep = (s > 0.0) & (s < 1.0)
        u, s = u[keep], s[keep]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        draws = (u * factor[:, None]).ravel()
        take = min(draws.size, count - filled)
        out[filled : filled + take] = draws[:take]
        filled += take
    return out.reshape(shape)


@dataclass
class SeedStream:
    """Named generators derived from one root seed; asking twice for a name resumes the same stream."""

    seed: int
    _streams: dict[str, np.random.Generator] = field(default_factory=dict, repr=False)

    def generator(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = philox_generator(self.seed, name)
        return self._streams[name]

    def fresh(self, name: str) -> np.random.Generator:
        return philox_generator(self.seed, name)

    def normal(self, name: str, size: int | tuple[int, ...]) -> np.ndarray:
        return polar_normal(self.generator(name), size)
