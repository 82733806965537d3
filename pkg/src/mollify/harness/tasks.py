"""
This module generates the synthetic datasets of the experiments and splits them into
training and validation sets.

- parity: random bit vectors labelled with the XOR of their bits.
- toy-regression: y = sin(3x) + noise * xi for x uniform on [-2, 2].
- seq-copy: random token sequences whose target at step s is the token at step
  s - lag; the first `lag` steps target a blank class numbered `vocab`.
"""

from dataclasses import dataclass

import numpy as np

from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValueError

__all__ = [
    "Dataset",
    "TaskSplit",
    "parity_labels",
    "gen_parity",
    "toy_regression_target",
    "gen_toy_regression",
    "gen_seq_copy",
    "split_dataset",
]

VALID_FRACTION = 0.1


@dataclass
class Dataset:
    """
    Inputs with one example per leading index and their targets.
    """

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        if len(self.inputs) != len(self.targets):
            raise MollifyValueError(
                f"cannot create Dataset; {len(self.inputs)} inputs but "
                f"{len(self.targets)} targets. "
            )

    def __len__(self) -> int:
        return len(self.inputs)

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.inputs[indices], self.targets[indices])


@dataclass
class TaskSplit:
    train: Dataset
    valid: Dataset


def _check_count(name: str, value: int) -> None:
    if value < 1:
        raise MollifyValueError(f"cannot generate dataset; {name} must be >= 1. ")


def parity_labels(bits: np.ndarray) -> np.ndarray:
    """
    XOR of every row of a 0/1 array.

    Examples:
        >>> parity_labels(np.array([[0, 0, 0], [1, 0, 1], [1, 1, 1]])).tolist()
        [0.0, 0.0, 1.0]
    """
    return (np.asarray(bits).astype(np.int64).sum(axis=1) % 2).astype(np.float64)


def gen_parity(n_bits: int, n_examples: int, rng: RngStream) -> Dataset:
    """
    `n_examples` uniformly random bit vectors of `n_bits` bits and their parities.
    """
    _check_count("n_bits", n_bits)
    _check_count("n_examples", n_examples)
    bits = rng.integers(0, 2, (n_examples, n_bits)).astype(np.float64)
    return Dataset(bits, parity_labels(bits))


def toy_regression_target(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """
    sin(3x) + noise.

    Examples:
        >>> round(float(toy_regression_target(np.pi / 6, 0.0)), 12)
        1.0
    """
    return np.sin(3.0 * np.asarray(x)) + noise


def gen_toy_regression(n: int, rng: RngStream, noise: float = 0.1) -> Dataset:
    """
    `n` points x ~ U[-2, 2] with targets sin(3x) + noise * N(0, 1), as (n, 1)
    arrays.
    """
    _check_count("n", n)
    x = rng.uniform(-2.0, 2.0, (n, 1))
    xi = rng.standard_normal((n, 1))
    return Dataset(x, toy_regression_target(x, noise * xi))


def gen_seq_copy(
    n: int, length: int, vocab: int, lag: int, rng: RngStream
) -> Dataset:
    """
    `n` one-hot token sequences of shape (length, vocab) with integer targets of
    shape (length,) in 0..vocab, where vocab is the blank class.

    Examples:
        >>> data = gen_seq_copy(1, 4, 3, 1, RngStream(0))
        >>> tokens = data.inputs[0].argmax(axis=1)
        >>> int(data.targets[0, 0]), bool((data.targets[0, 1:] == tokens[:-1]).all())
        (3, True)
    """
    _check_count("n", n)
    _check_count("length", length)
    _check_count("vocab", vocab)
    if not 0 <= lag < length:
        raise MollifyValueError(
            f"cannot generate dataset; lag must be in [0, {length}), got {lag}. "
        )
    tokens = rng.integers(0, vocab, (n, length))
    inputs = np.eye(vocab)[tokens]
    targets = np.full((n, length), vocab, dtype=np.int64)
    targets[:, lag:] = tokens[:, : length - lag]
    return Dataset(inputs, targets)


def split_dataset(
    data: Dataset, rng: RngStream, valid_fraction: float = VALID_FRACTION
) -> TaskSplit:
    """
    Shuffle `data` and hold out `valid_fraction` of it (at least one example when
    there are two or more) for validation.
    """
    order = rng.permutation(len(data))
    n_valid = int(round(valid_fraction * len(data)))
    if len(data) >= 2:
        n_valid = min(max(n_valid, 1), len(data) - 1)
    else:
        n_valid = 0
    return TaskSplit(data.subset(order[n_valid:]), data.subset(order[:n_valid]))
