"""
This module defines mollified GRU and LSTM cells.

Gates are mollified hard-sigmoids pinned to scheduled targets (see `gates`);
candidates use the mollified tanh activation with learnable per-unit sharpness.

GRU, with z the update gate and r the reset gate:

    h_t = (1 - z) * h_prev + z * psi(x W_c + (r * h_prev) U_c + b_c)

LSTM, with input, forget and output gates i, f, o:

    c_t = f * c_prev + i * psi(x W_c + h_prev U_c + b_c)
    h_t = o * tanh(c_t)

Cell parameters are named `W_<gate>` (input weights), `U_<gate>` (recurrent weights)
and `b_<gate>`, with `candidate` as the gate name of the candidate, plus `a`.

Passing no random stream to a step runs it in inference mode.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from mollify.activations.activation import (
    MollifiedActivation,
    NoiseRealization,
    activation_backward,
    expected_activation,
    noisy_activation,
)
from mollify.activations.kinds import ActivationKind
from mollify.networks.layer import glorot_uniform
from mollify.numerics.matrix import Matrix
from mollify.numerics.rng import RngStream
from mollify.recurrent.gates import (
    GateRealization,
    GateSpec,
    ScheduleRole,
    gate_backward,
    gate_forward,
)
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.numerics import ShapeMismatchError

__all__ = [
    "CellKind",
    "MollifiedCell",
    "CellCache",
    "gru_forward",
    "gru_step",
    "gru_backward",
    "lstm_forward",
    "lstm_step",
    "lstm_backward",
]

CANDIDATE = "candidate"


class CellKind(str, Enum):
    GRU = "gru"
    LSTM = "lstm"


_default_specs: Dict[CellKind, Dict[str, GateSpec]] = {
    CellKind.GRU: {
        "update": GateSpec(ScheduleRole.INVERSE_T),
        "reset": GateSpec(ScheduleRole.CONSTANT_ONE),
    },
    CellKind.LSTM: {
        "input": GateSpec(ScheduleRole.INVERSE_T),
        "forget": GateSpec(ScheduleRole.COMPLEMENT_INVERSE_T),
        "output": GateSpec(ScheduleRole.CONSTANT_ONE),
    },
}


@dataclass
class MollifiedCell:
    """
    Weights, candidate activation and gate schedules of a recurrent cell.

    Examples:
        >>> cell = MollifiedCell.initialize("gru", 3, 4, RngStream(0))
        >>> sorted(cell.specs)
        ['reset', 'update']
        >>> cell.weights["U_update"].shape
        (4, 4)
    """

    kind: CellKind
    weights: Dict[str, Matrix]
    act: MollifiedActivation
    specs: Dict[str, GateSpec] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.kind = CellKind(self.kind)
        if not self.specs:
            self.specs = dict(_default_specs[self.kind])
        if set(self.specs) != set(_default_specs[self.kind]):
            raise MollifyValidationError(
                f"cannot create MollifiedCell; a {self.kind.value} cell has gates "
                f"{sorted(_default_specs[self.kind])}, got {sorted(self.specs)}. "
            )
        self.weights = {
            name: np.array(value, dtype=np.float64)
            for name, value in self.weights.items()
        }
        missing = [
            f"{prefix}_{gate}"
            for gate in self.gate_names
            for prefix in ("W", "U", "b")
            if f"{prefix}_{gate}" not in self.weights
        ]
        if missing:
            raise MollifyValidationError(
                f"cannot create MollifiedCell; missing weights: {missing}. "
            )
        expected = ((self.input_dim, self.hidden), (self.hidden,) * 2, (self.hidden,))
        for gate in self.gate_names:
            shapes = (
                self.weights[f"W_{gate}"].shape,
                self.weights[f"U_{gate}"].shape,
                self.weights[f"b_{gate}"].shape,
            )
            if shapes != expected:
                raise ShapeMismatchError(
                    f"cannot create MollifiedCell; weights of {gate} have shapes "
                    f"{shapes}. ",
                    shapes[0],
                    (self.input_dim, self.hidden),
                )
        if self.act.units != self.hidden:
            raise ShapeMismatchError(
                f"cannot create MollifiedCell; candidate activation has "
                f"{self.act.units} units but the cell has {self.hidden}. ",
                (self.act.units,),
                (self.hidden,),
            )

    @classmethod
    def initialize(
        cls,
        kind: CellKind,
        input_dim: int,
        hidden: int,
        rng: RngStream,
        c: float = 1.0,
        a_range: float = 2.0,
    ) -> "MollifiedCell":
        """
        Create a cell with Glorot-uniform weights, zero biases, a tanh candidate and
        the default gate schedules of its kind.
        """
        kind = CellKind(kind)
        weights = {}
        for gate in list(_default_specs[kind]) + [CANDIDATE]:
            weights[f"W_{gate}"] = glorot_uniform(input_dim, hidden, rng)
            weights[f"U_{gate}"] = glorot_uniform(hidden, hidden, rng)
            weights[f"b_{gate}"] = np.zeros(hidden)
        act = MollifiedActivation.initialize(
            ActivationKind.TANH, hidden, rng, c, a_range
        )
        return cls(kind, weights, act)

    @property
    def gate_names(self) -> Tuple[str, ...]:
        return tuple(_default_specs[self.kind]) + (CANDIDATE,)

    @property
    def input_dim(self) -> int:
        return self.weights[f"W_{CANDIDATE}"].shape[0]

    @property
    def hidden(self) -> int:
        return self.weights[f"W_{CANDIDATE}"].shape[1]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = dict(self.weights)
        params["a"] = self.act.a
        return params

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        if name == "a":
            self.act.a = value
        elif name in self.weights:
            self.weights[name] = value
        else:
            raise MollifyValidationError(
                f"cannot set parameter {name!r}; cell has no such parameter. "
            )


@dataclass
class CellCache:
    """
    Inputs, gate realizations and intermediate values of one cell step.
    """

    x: Matrix
    h_prev: Matrix
    gates: Dict[str, GateRealization]
    values: Dict[str, Matrix]
    candidate_pre: Matrix
    realization: NoiseRealization
    c_prev: Optional[Matrix] = None


def _check_step(
    x_t: Matrix, h_prev: Matrix, cell: MollifiedCell, kind: CellKind
) -> None:
    if cell.kind is not kind:
        raise MollifyValueError(
            f"cannot run a {kind.value} step on a {cell.kind.value} cell. "
        )
    if x_t.ndim != 2 or x_t.shape[1] != cell.input_dim:
        raise ShapeMismatchError(
            f"cannot run cell step; input shape {x_t.shape} does not match input "
            f"dimension {cell.input_dim}. ",
            tuple(x_t.shape),
            (cell.input_dim,),
        )
    if h_prev.shape != (x_t.shape[0], cell.hidden):
        raise ShapeMismatchError(
            f"cannot run cell step; state shape {h_prev.shape} does not match "
            f"{(x_t.shape[0], cell.hidden)}. ",
            tuple(h_prev.shape),
            (x_t.shape[0], cell.hidden),
        )


def _affine(x: Matrix, h: Matrix, cell: MollifiedCell, gate: str) -> Matrix:
    w = cell.weights
    return x @ w[f"W_{gate}"] + h @ w[f"U_{gate}"] + w[f"b_{gate}"]


def _affine_backward(
    grad_pre: Matrix,
    x: Matrix,
    h: Matrix,
    cell: MollifiedCell,
    gate: str,
    grads: Dict[str, np.ndarray],
) -> Tuple[Matrix, Matrix]:
    w = cell.weights
    grads[f"W_{gate}"] = x.T @ grad_pre
    grads[f"U_{gate}"] = h.T @ grad_pre
    grads[f"b_{gate}"] = grad_pre.sum(axis=0)
    return grad_pre @ w[f"W_{gate}"].T, grad_pre @ w[f"U_{gate}"].T


def _gates(
    x_t: Matrix,
    h_prev: Matrix,
    cell: MollifiedCell,
    p: float,
    t: int,
    rng: Optional[RngStream],
):
    values, realizations = {}, {}
    for gate, spec in cell.specs.items():
        pre = _affine(x_t, h_prev, cell, gate)
        values[gate], realizations[gate] = gate_forward(pre, spec, p, t, rng)
    return values, realizations


def _candidate(
    pre: Matrix, cell: MollifiedCell, p: float, rng: Optional[RngStream]
) -> Tuple[Matrix, NoiseRealization]:
    if rng is None:
        return expected_activation(pre, p, cell.act)
    return noisy_activation(pre, p, cell.act, rng)


def gru_forward(
    x_t: Matrix,
    h_prev: Matrix,
    cell: MollifiedCell,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Tuple[Matrix, CellCache]:
    """
    GRU step returning the new state and the cache `gru_backward` needs.

    Raises `ShapeMismatchError` if inputs do not match the cell's dimensions.
    """
    _check_step(x_t, h_prev, cell, CellKind.GRU)
    values, realizations = _gates(x_t, h_prev, cell, p, t, rng)
    z, r = values["update"], values["reset"]
    candidate_pre = _affine(x_t, r * h_prev, cell, CANDIDATE)
    candidate, realization = _candidate(candidate_pre, cell, p, rng)
    values[CANDIDATE] = candidate
    h_t = (1.0 - z) * h_prev + z * candidate
    return h_t, CellCache(
        x_t, h_prev, realizations, values, candidate_pre, realization
    )


def gru_step(
    x_t: Matrix,
    h_prev: Matrix,
    cell: MollifiedCell,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Matrix:
    """
    h_t of a mollified GRU at noise level `p` and annealing step `t`; the update
    gate is pinned toward 1/t and the reset gate toward 1.
    """
    h_t, _ = gru_forward(x_t, h_prev, cell, p, t, rng)
    return h_t


def gru_backward(
    grad_h: Matrix, cache: CellCache, cell: MollifiedCell
) -> Tuple[Matrix, Matrix, Dict[str, np.ndarray]]:
    """
    Return (gradient w.r.t. x_t, gradient w.r.t. h_prev, parameter gradients) at
    the cached realization.
    """
    z, r = cache.values["update"], cache.values["reset"]
    candidate = cache.values[CANDIDATE]
    grads: Dict[str, np.ndarray] = {}
    grad_h_prev = grad_h * (1.0 - z)
    grad_candidate_pre, grads["a"] = activation_backward(
        cache.realization, cache.candidate_pre, grad_h * z
    )
    grad_x, grad_reset_h = _affine_backward(
        grad_candidate_pre, cache.x, r * cache.h_prev, cell, CANDIDATE, grads
    )
    grad_h_prev = grad_h_prev + grad_reset_h * r
    upstream = {
        "update": grad_h * (candidate - cache.h_prev),
        "reset": grad_reset_h * cache.h_prev,
    }
    for gate, grad_gate in upstream.items():
        grad_pre = gate_backward(cache.gates[gate], grad_gate)
        dx, dh = _affine_backward(grad_pre, cache.x, cache.h_prev, cell, gate, grads)
        grad_x = grad_x + dx
        grad_h_prev = grad_h_prev + dh
    return grad_x, grad_h_prev, grads


def lstm_forward(
    x_t: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    cell: MollifiedCell,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Tuple[Matrix, Matrix, CellCache]:
    """
    LSTM step returning (h_t, c_t) and the cache `lstm_backward` needs.

    Raises `ShapeMismatchError` if inputs do not match the cell's dimensions.
    """
    _check_step(x_t, h_prev, cell, CellKind.LSTM)
    if c_prev.shape != h_prev.shape:
        raise ShapeMismatchError(
            f"cannot run lstm step; memory shape {c_prev.shape} does not match state "
            f"shape {h_prev.shape}. ",
            tuple(c_prev.shape),
            tuple(h_prev.shape),
        )
    values, realizations = _gates(x_t, h_prev, cell, p, t, rng)
    candidate_pre = _affine(x_t, h_prev, cell, CANDIDATE)
    candidate, realization = _candidate(candidate_pre, cell, p, rng)
    values[CANDIDATE] = candidate
    c_t = values["forget"] * c_prev + values["input"] * candidate
    values["tanh_c"] = np.tanh(c_t)
    h_t = values["output"] * values["tanh_c"]
    cache = CellCache(
        x_t, h_prev, realizations, values, candidate_pre, realization, c_prev
    )
    return h_t, c_t, cache


def lstm_step(
    x_t: Matrix,
    h_prev: Matrix,
    c_prev: Matrix,
    cell: MollifiedCell,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Tuple[Matrix, Matrix]:
    """
    (h_t, c_t) of a mollified LSTM; the input gate is pinned toward 1/t, the forget
    gate toward 1 - 1/t and the output gate toward 1.
    """
    h_t, c_t, _ = lstm_forward(x_t, h_prev, c_prev, cell, p, t, rng)
    return h_t, c_t


def lstm_backward(
    grad_h: Matrix, grad_c: Matrix, cache: CellCache, cell: MollifiedCell
) -> Tuple[Matrix, Matrix, Matrix, Dict[str, np.ndarray]]:
    """
    Return (gradient w.r.t. x_t, w.r.t. h_prev, w.r.t. c_prev, parameter gradients)
    at the cached realization.
    """
    values = cache.values
    grads: Dict[str, np.ndarray] = {}
    tanh_c = values["tanh_c"]
    grad_c = grad_c + grad_h * values["output"] * (1.0 - tanh_c**2)
    grad_candidate_pre, grads["a"] = activation_backward(
        cache.realization, cache.candidate_pre, grad_c * values["input"]
    )
    grad_x, grad_h_prev = _affine_backward(
        grad_candidate_pre, cache.x, cache.h_prev, cell, CANDIDATE, grads
    )
    upstream = {
        "input": grad_c * values[CANDIDATE],
        "forget": grad_c * cache.c_prev,
        "output": grad_h * tanh_c,
    }
    for gate, grad_gate in upstream.items():
        grad_pre = gate_backward(cache.gates[gate], grad_gate)
        dx, dh = _affine_backward(grad_pre, cache.x, cache.h_prev, cell, gate, grads)
        grad_x = grad_x + dx
        grad_h_prev = grad_h_prev + dh
    return grad_x, grad_h_prev, grad_c * values["forget"], grads
