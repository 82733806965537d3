"""
This module defines a sequence model: a mollified GRU or LSTM cell read out by a
softmax head at every time step, trained with truncated backpropagation through
time.

Inputs are arrays of shape (batch, steps, input_dim), targets integer class labels of
shape (batch, steps). The sequence loss is the mean of the per-step cross-entropies.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from mollify.activations.activation import MollifiedActivation
from mollify.networks.heads import Head, HeadKind
from mollify.numerics.matrix import Matrix
from mollify.numerics.rng import RngStream
from mollify.recurrent.cells import (
    CellCache,
    CellKind,
    MollifiedCell,
    gru_backward,
    gru_forward,
    lstm_backward,
    lstm_forward,
)
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.networks import NonFiniteLossError
from mollify.exceptions.numerics import ShapeMismatchError

__all__ = [
    "SequenceModel",
    "SequenceRecord",
    "initial_state",
    "sequence_forward",
    "sequence_backward",
    "sequence_loss_and_grads",
    "sequence_infer",
    "bptt_chunks",
]

State = Tuple[Matrix, Optional[Matrix]]


@dataclass
class SequenceModel:
    """
    A recurrent cell and the softmax head applied to its state at every step.
    """

    cell: MollifiedCell
    head: Head

    def __post_init__(self) -> None:
        if self.head.kind is not HeadKind.SOFTMAX_CROSS_ENTROPY:
            raise MollifyValidationError(
                "cannot create SequenceModel; the head must be softmax-cross-entropy, "
                f"got {self.head.kind.value}. "
            )
        if self.head.V.shape[0] != self.cell.hidden:
            raise ShapeMismatchError(
                f"cannot create SequenceModel; head fan-in {self.head.V.shape[0]} "
                f"does not match cell width {self.cell.hidden}. ",
                (self.head.V.shape[0],),
                (self.cell.hidden,),
            )

    @classmethod
    def initialize(
        cls,
        kind: CellKind,
        input_dim: int,
        hidden: int,
        classes: int,
        rng: RngStream,
        c: float = 1.0,
        a_range: float = 2.0,
    ) -> "SequenceModel":
        cell_stream, head_stream = rng.spawn(2)
        cell = MollifiedCell.initialize(
            kind, input_dim, hidden, cell_stream, c, a_range
        )
        head = Head.initialize(
            HeadKind.SOFTMAX_CROSS_ENTROPY, hidden, classes, head_stream
        )
        return cls(cell, head)

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {
            f"cell.{name}": value for name, value in self.cell.parameters().items()
        }
        for name, value in self.head.parameters().items():
            params[f"head.{name}"] = value
        return params

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        owner, _, attribute = name.partition(".")
        if owner == "cell":
            self.cell.set_parameter(attribute, value)
        elif owner == "head":
            self.head.set_parameter(attribute, value)
        else:
            raise MollifyValidationError(f"cannot set parameter {name!r}. ")

    def set_noise_constant(self, c: float) -> None:
        self.cell.act.c = c

    def describe(self) -> Dict[str, Any]:
        return {
            "type": "sequence",
            "cell": {
                "kind": self.cell.kind.value,
                "input_dim": self.cell.input_dim,
                "hidden": self.cell.hidden,
                "c": self.cell.act.c,
            },
            "head": {
                "kind": self.head.kind.value,
                "fan_in": self.head.V.shape[0],
                "outputs": self.head.outputs,
            },
        }

    @classmethod
    def from_description(
        cls, model: Dict[str, Any], parameters: Dict[str, np.ndarray]
    ) -> "SequenceModel":
        weights = {
            name[len("cell.") :]: value
            for name, value in parameters.items()
            if name.startswith("cell.") and name != "cell.a"
        }
        act = MollifiedActivation("tanh", parameters["cell.a"], model["cell"]["c"])
        cell = MollifiedCell(model["cell"]["kind"], weights, act)
        head = Head(model["head"]["kind"], parameters["head.V"], parameters["head.d"])
        return cls(cell, head)


@dataclass
class SequenceRecord:
    """
    Result of a training forward pass over a sequence chunk. `final_state` is the
    cell state after the last step, to be carried into the next chunk.
    """

    loss: float
    outputs: List[Matrix]
    hidden: List[Matrix]
    caches: List[CellCache]
    final_state: State
    accuracy: float = 0.0
    step_losses: List[float] = field(default_factory=list)


def initial_state(model: SequenceModel, batch: int) -> State:
    """
    Zero state (and zero memory for LSTM cells) for `batch` sequences.
    """
    h0 = np.zeros((batch, model.cell.hidden))
    c0 = np.zeros_like(h0) if model.cell.kind is CellKind.LSTM else None
    return h0, c0


def _check_sequence(inputs: np.ndarray, targets: Optional[np.ndarray]) -> None:
    if inputs.ndim != 3:
        raise ShapeMismatchError(
            "cannot run sequence model; inputs must have shape (batch, steps, "
            f"input_dim), got {inputs.shape}. ",
            tuple(inputs.shape),
            (),
        )
    if targets is not None and targets.shape != inputs.shape[:2]:
        raise ShapeMismatchError(
            f"cannot run sequence model; target shape {targets.shape} does not match "
            f"input shape {inputs.shape[:2]}. ",
            tuple(targets.shape),
            tuple(inputs.shape[:2]),
        )


def _step(
    x_t: Matrix,
    state: State,
    model: SequenceModel,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Tuple[State, CellCache]:
    h_prev, c_prev = state
    if model.cell.kind is CellKind.GRU:
        h_t, cache = gru_forward(x_t, h_prev, model.cell, p, t, rng)
        return (h_t, None), cache
    h_t, c_t, cache = lstm_forward(x_t, h_prev, c_prev, model.cell, p, t, rng)
    return (h_t, c_t), cache


def sequence_forward(
    inputs: np.ndarray,
    targets: np.ndarray,
    model: SequenceModel,
    p: float,
    t: int,
    rng: RngStream,
    state: Optional[State] = None,
) -> SequenceRecord:
    """
    Stochastic forward pass. Every time step draws its noise from its own sub-stream
    of `rng`; `t` is the annealing step the gate targets follow.

    Raises `NonFiniteLossError` if a state or the loss is not finite.
    """
    _check_sequence(inputs, targets)
    batch, steps, _ = inputs.shape
    if state is None:
        state = initial_state(model, batch)
    streams = rng.spawn(steps)
    outputs, hidden, caches, step_losses = [], [], [], []
    correct = 0.0
    for position in range(steps):
        x_t = inputs[:, position, :]
        state, cache = _step(x_t, state, model, p, t, streams[position])
        if not np.isfinite(state[0]).all():
            raise NonFiniteLossError(
                f"sequence forward pass produced a non-finite state at step "
                f"{position}. "
            )
        logits = model.head.forward(state[0])
        loss, _ = model.head.loss(logits, targets[:, position])
        outputs.append(logits)
        hidden.append(state[0])
        caches.append(cache)
        step_losses.append(loss)
        correct += model.head.accuracy(logits, targets[:, position])
    loss = float(np.mean(step_losses))
    if not np.isfinite(loss):
        raise NonFiniteLossError("sequence forward pass produced a non-finite loss. ")
    return SequenceRecord(
        loss, outputs, hidden, caches, state, correct / steps, step_losses
    )


def sequence_backward(
    record: SequenceRecord, targets: np.ndarray, model: SequenceModel
) -> Dict[str, np.ndarray]:
    """
    Gradients of the mean sequence loss at the sampled realization, backpropagated
    through every step of the chunk. No gradient flows into the initial state.
    """
    steps = len(record.caches)
    grads = {
        name: np.zeros_like(value) for name, value in model.named_parameters().items()
    }
    grad_h_next = np.zeros_like(record.hidden[0])
    grad_c_next = np.zeros_like(record.hidden[0])
    for position in reversed(range(steps)):
        _, grad_logits = model.head.loss(record.outputs[position], targets[:, position])
        grad_h, head_grads = model.head.backward(
            record.hidden[position], grad_logits / steps
        )
        for name, value in head_grads.items():
            grads[f"head.{name}"] += value
        grad_h = grad_h + grad_h_next
        cache = record.caches[position]
        if model.cell.kind is CellKind.GRU:
            _, grad_h_next, cell_grads = gru_backward(grad_h, cache, model.cell)
        else:
            _, grad_h_next, grad_c_next, cell_grads = lstm_backward(
                grad_h, grad_c_next, cache, model.cell
            )
        for name, value in cell_grads.items():
            grads[f"cell.{name}"] += value
    return grads


def sequence_loss_and_grads(
    inputs: np.ndarray,
    targets: np.ndarray,
    model: SequenceModel,
    p: float,
    t: int,
    rng: RngStream,
    state: Optional[State] = None,
) -> Tuple[SequenceRecord, Dict[str, np.ndarray]]:
    record = sequence_forward(inputs, targets, model, p, t, rng, state)
    return record, sequence_backward(record, targets, model)


def sequence_infer(
    inputs: np.ndarray, model: SequenceModel, p: float, t: int
) -> np.ndarray:
    """
    Deterministic logits of shape (batch, steps, classes), with every random
    variable replaced by its mean.
    """
    _check_sequence(inputs, None)
    batch, steps, _ = inputs.shape
    state = initial_state(model, batch)
    logits = []
    for position in range(steps):
        state, _ = _step(inputs[:, position, :], state, model, p, t, None)
        logits.append(model.head.forward(state[0]))
    return np.stack(logits, axis=1)


def bptt_chunks(steps: int, length: int) -> List[slice]:
    """
    Split `steps` time steps into consecutive chunks of at most `length` steps.

    Raises `MollifyValueError` if `length` is not positive.

    Examples:
        >>> bptt_chunks(5, 2)
        [slice(0, 2, None), slice(2, 4, None), slice(4, 5, None)]
    """
    if length < 1:
        raise MollifyValueError(
            f"cannot split sequence; chunk length must be positive, got {length}. "
        )
    return [
        slice(start, min(start + length, steps)) for start in range(0, steps, length)
    ]
