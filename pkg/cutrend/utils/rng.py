"""
CUTrend Random Streams
Counter-based random number streams keyed by integer paths.

A stream is identified by a master seed and a tuple of integer keys such as
(namespace, iteration, epoch). Generators are Philox instances seeded from a
SeedSequence over the full key, so any stream can be re-created in another
process or a later rerun and yields the same numbers.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

# Key namespaces used as the first component of a stream path.
INIT = 0
PROPOSAL = 1
FILTER = 2
ACCEPT = 3
TRUTH = 4
REPLICATE = 5
METHOD = 6
PRIOR_CHECK = 7


@dataclass(frozen=True)
class RandomStream:
    """A named position in the tree of random streams."""

    seed: int
    key: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.seed < 0 or any(k < 0 for k in self.key):
            raise ValueError("stream seed and keys must be non-negative")

    def spawn(self, *key: int) -> "RandomStream":
        """Return the child stream at ``self.key + key``."""
        return RandomStream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        sequence = np.random.SeedSequence([self.seed, *self.key])
        return np.random.Generator(np.random.Philox(sequence))

    def derive_seed(self) -> int:
        """A 63-bit integer seed derived from this stream."""
        sequence = np.random.SeedSequence([self.seed, *self.key])
        return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def as_stream(seed_or_stream: Union[int, RandomStream]) -> RandomStream:
    if isinstance(seed_or_stream, RandomStream):
        return seed_or_stream
    return RandomStream(int(seed_or_stream))
