from typing import List

import numpy as np

DEFAULT_CHUNK = 8192


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit seed for the sub-experiment identified by `keys`, stable across runs and platforms."""
    sequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def spawn_generators(seed: int, count: int) -> List[np.random.Generator]:
    """`count` independent PCG64 generators derived from one seed."""
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(count)]


class ExponentialStream:
    """Exponential variates with the given rate, drawn by inverse CDF in buffered chunks."""

    def __init__(self, generator: np.random.Generator, rate: float, chunk: int = DEFAULT_CHUNK):
        if rate <= 0:
            raise ValueError(f"rate must be > 0, got {rate}")
        self.generator = generator
        self.rate = rate
        self.chunk = chunk
        self._buffer: List[float] = []
        self._position = 0

    def next(self) -> float:
        if self._position >= len(self._buffer):
            uniforms = self.generator.random(self.chunk)
            self._buffer = (-np.log1p(-uniforms) / self.rate).tolist()
            self._position = 0
        value = self._buffer[self._position]
        self._position += 1
        return value
