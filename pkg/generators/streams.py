from dataclasses import dataclass, replace

import numpy as np

SEED_LIMIT = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """
    Counter-based random stream keyed by (master seed, stream index, counter).

    Each stream index gets its own Philox key through SeedSequence spawning,
    so replications can be generated in any order or thread.
    """
    master_seed: int
    stream_index: int = 0
    counter: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < SEED_LIMIT:
            raise ValueError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0 or self.counter < 0:
            raise ValueError("stream index and counter must be nonnegative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        bit_generator = np.random.Philox(seq)
        if self.counter:
            bit_generator = bit_generator.advance(self.counter)
        return np.random.Generator(bit_generator)

    def spawn(self, stream_index: int) -> "RngStream":
        return replace(self, stream_index=stream_index, counter=0)

    def advanced(self, steps: int) -> "RngStream":
        return replace(self, counter=self.counter + steps)
