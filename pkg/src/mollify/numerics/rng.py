"""
This module defines the seeded random stream every stochastic operation draws from.

Streams are numpy PCG64 generators seeded through `numpy.random.SeedSequence`.
Sub-streams are spawned from the seed sequence, so the draws of a sub-stream depend
only on the root seed and the sub-stream's spawn position, never on how many values
other streams have drawn.
"""

from typing import List, Optional, Tuple, Union

import numpy as np

from mollify.exceptions.base import MollifyValueError

__all__ = ["RngStream"]

Shape = Union[int, Tuple[int, ...]]


class RngStream:
    """
    A reproducible stream of random draws.

    Identical seeds produce identical draw sequences across runs and platforms.
    A stream is not meant to be shared between threads; spawn one per worker.

    Examples:
        >>> a, b = RngStream(7), RngStream(7)
        >>> bool((a.standard_normal(3) == b.standard_normal(3)).all())
        True
        >>> RngStream(7).bernoulli(0.0, 4).tolist()
        [0.0, 0.0, 0.0, 0.0]
    """

    def __init__(
        self, seed: int, _sequence: Optional[np.random.SeedSequence] = None
    ) -> None:
        self.seed = seed
        self._sequence = (
            _sequence if _sequence is not None else np.random.SeedSequence(seed)
        )
        self._generator = np.random.Generator(np.random.PCG64(self._sequence))

    def spawn(self, count: int) -> List["RngStream"]:
        """
        Create `count` independent child streams.

        Children are numbered by spawn order; the n-th child of a stream is the same
        across runs regardless of the draws made on the parent.
        """
        return [
            RngStream(self.seed, _sequence=child)
            for child in self._sequence.spawn(count)
        ]

    def standard_normal(self, shape: Shape) -> np.ndarray:
        return self._generator.standard_normal(shape)

    def normal(self, mean: float, std: float, shape: Shape) -> np.ndarray:
        return self._generator.normal(mean, std, shape)

    def uniform(self, low: float, high: float, shape: Shape) -> np.ndarray:
        return self._generator.uniform(low, high, shape)

    def bernoulli(self, p: float, shape: Shape) -> np.ndarray:
        """
        Draw 0/1 values (as floats) that are 1 with probability `p`.

        Raises `MollifyValueError` if `p` is not within [0, 1].
        """
        if not 0.0 <= p <= 1.0:
            raise MollifyValueError(
                f"cannot draw Bernoulli values; invalid probability: {p}. "
            )
        return (self._generator.random(shape) < p).astype(np.float64)

    def integers(self, low: int, high: int, shape: Shape) -> np.ndarray:
        return self._generator.integers(low, high, shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def __repr__(self) -> str:
        return f"<RngStream: seed={self.seed} spawn_key={self._sequence.spawn_key}>"
