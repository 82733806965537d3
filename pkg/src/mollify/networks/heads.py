"""
This module defines the output heads: an affine read-out followed by a loss that is
convex in the read-out's pre-activations.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Tuple

import numpy as np

from mollify.numerics.matrix import Matrix, Vector
from mollify.numerics.rng import RngStream
from mollify.networks.layer import glorot_uniform
from mollify.exceptions.base import MollifyValidationError
from mollify.exceptions.numerics import ShapeMismatchError

__all__ = ["HeadKind", "Head", "head_loss"]


class HeadKind(str, Enum):
    SIGMOID_CROSS_ENTROPY = "sigmoid-cross-entropy"
    SOFTMAX_CROSS_ENTROPY = "softmax-cross-entropy"
    SQUARED_ERROR = "squared-error"


def _sigmoid_cross_entropy(logits: Matrix, targets: np.ndarray):
    y = targets.reshape(logits.shape)
    loss = np.mean(np.logaddexp(0.0, logits) - y * logits)
    probs = 0.5 * (1.0 + np.tanh(0.5 * logits))
    return float(loss), (probs - y) / logits.shape[0]


def _softmax_cross_entropy(logits: Matrix, targets: np.ndarray):
    labels = targets.reshape(-1).astype(np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(logits.shape[0])
    loss = -np.mean(log_probs[rows, labels])
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return float(loss), grad / logits.shape[0]


def _squared_error(outputs: Matrix, targets: np.ndarray):
    y = targets.reshape(outputs.shape)
    residual = outputs - y
    loss = 0.5 * np.mean(np.sum(residual**2, axis=1))
    return float(loss), residual / outputs.shape[0]


def _binary_accuracy(logits: Matrix, targets: np.ndarray) -> float:
    return float(np.mean((logits.reshape(-1) > 0.0) == (targets.reshape(-1) > 0.5)))


def _categorical_accuracy(logits: Matrix, targets: np.ndarray) -> float:
    return float(np.mean(logits.argmax(axis=1) == targets.reshape(-1)))


def _tolerance_accuracy(outputs: Matrix, targets: np.ndarray) -> float:
    return float(np.mean(np.abs(outputs - targets.reshape(outputs.shape)) < 0.1))


_losses: Dict[HeadKind, Callable[[Matrix, np.ndarray], Tuple[float, Matrix]]] = {
    HeadKind.SIGMOID_CROSS_ENTROPY: _sigmoid_cross_entropy,
    HeadKind.SOFTMAX_CROSS_ENTROPY: _softmax_cross_entropy,
    HeadKind.SQUARED_ERROR: _squared_error,
}

_accuracies: Dict[HeadKind, Callable[[Matrix, np.ndarray], float]] = {
    HeadKind.SIGMOID_CROSS_ENTROPY: _binary_accuracy,
    HeadKind.SOFTMAX_CROSS_ENTROPY: _categorical_accuracy,
    HeadKind.SQUARED_ERROR: _tolerance_accuracy,
}


def head_loss(
    kind: HeadKind, outputs: Matrix, targets: np.ndarray
) -> Tuple[float, Matrix]:
    """
    Mean loss over the batch and its gradient with respect to `outputs`.

    Examples:
        >>> loss, grad = head_loss(
        ...     HeadKind.SIGMOID_CROSS_ENTROPY, np.zeros((2, 1)), np.array([0, 1])
        ... )
        >>> round(loss, 6), grad.ravel().tolist()
        (0.693147, [0.25, -0.25])
    """
    return _losses[HeadKind(kind)](outputs, targets)


@dataclass
class Head:
    """
    Affine read-out `h V + d` with `outputs` columns and its loss.

    Sigmoid-cross-entropy heads have one output column; softmax heads one per
    class; squared-error heads one per regression target.
    """

    kind: HeadKind
    V: Matrix
    d: Vector

    def __post_init__(self) -> None:
        self.kind = HeadKind(self.kind)
        self.V = np.array(self.V, dtype=np.float64)
        self.d = np.array(self.d, dtype=np.float64).reshape(-1)
        if self.V.ndim != 2 or self.V.shape[1] != self.d.size:
            raise ShapeMismatchError(
                f"cannot create Head; weight shape {self.V.shape} does not match bias "
                f"shape {self.d.shape}. ",
                self.V.shape,
                self.d.shape,
            )
        if self.kind is HeadKind.SIGMOID_CROSS_ENTROPY and self.outputs != 1:
            raise MollifyValidationError(
                "cannot create Head; sigmoid-cross-entropy heads have exactly one "
                f"output, got {self.outputs}. "
            )

    @classmethod
    def initialize(
        cls, kind: HeadKind, fan_in: int, outputs: int, rng: RngStream
    ) -> "Head":
        return cls(kind, glorot_uniform(fan_in, outputs, rng), np.zeros(outputs))

    @property
    def outputs(self) -> int:
        return self.V.shape[1]

    def forward(self, h: Matrix) -> Matrix:
        if h.shape[1] != self.V.shape[0]:
            raise ShapeMismatchError(
                f"cannot apply head; input shape {h.shape} does not match fan-in "
                f"{self.V.shape[0]}. ",
                tuple(h.shape),
                (self.V.shape[0],),
            )
        return h @ self.V + self.d

    def loss(self, outputs: Matrix, targets: np.ndarray) -> Tuple[float, Matrix]:
        return head_loss(self.kind, outputs, targets)

    def accuracy(self, outputs: Matrix, targets: np.ndarray) -> float:
        return _accuracies[self.kind](outputs, targets)

    def backward(self, h: Matrix, grad_outputs: Matrix):
        """
        Return (gradient w.r.t. h, {"V": ..., "d": ...}).
        """
        grads = {"V": h.T @ grad_outputs, "d": grad_outputs.sum(axis=0)}
        return grad_outputs @ self.V.T, grads

    def parameters(self) -> Dict[str, np.ndarray]:
        return {"V": self.V, "d": self.d}

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        if name == "V":
            self.V = value
        elif name == "d":
            self.d = value
        else:
            raise MollifyValidationError(
                f"cannot set parameter {name!r}; head has no such parameter. "
            )
