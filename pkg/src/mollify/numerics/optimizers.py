"""
This module defines:
Optimizer state and the optimizer kinds
Functions to fetch and register optimizer step functions
The SGD-with-momentum and RMSProp update rules

An optimizer step takes a parameter matrix, its gradient and the optimizer state and
returns the updated parameters. The state holds one accumulator per parameter name,
shaped like the parameter; accumulators are created on first use.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict

import numpy as np

try:
    from typing import TypeAlias  # Python >= 3.10 pylint: disable=ungrouped-imports
except ImportError:
    from typing_extensions import TypeAlias  # Python < 3.10

from mollify.constants import RMSPROP_EPSILON
from mollify.numerics.matrix import Matrix, first_non_finite
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.numerics import (
    NonFiniteValueError,
    ShapeMismatchError,
    UnknownOptimizerError,
)

__all__ = [
    "OptimizerKind",
    "OptimizerState",
    "register_optimizer",
    "get_optimizer",
    "sgd_momentum_step",
    "rmsprop_step",
    "apply_updates",
]


class OptimizerKind(str, Enum):
    SGD_MOMENTUM = "sgd-momentum"
    RMSPROP = "rmsprop"


@dataclass
class OptimizerState:
    """
    Hyperparameters and per-parameter accumulators of an optimizer.

    For `sgd-momentum` the accumulators are velocities, for `rmsprop` they are
    moving averages of squared gradients.

    Examples:
        >>> OptimizerState(OptimizerKind.SGD_MOMENTUM, learning_rate=0.1, momentum=0.9)
        <OptimizerState: sgd-momentum lr=0.1 momentum=0.9>
    """

    kind: OptimizerKind
    learning_rate: float
    momentum: float = 0.0
    rms_decay: float = 0.9
    nesterov: bool = False
    accumulators: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        try:
            self.kind = OptimizerKind(self.kind)
        except ValueError:
            raise UnknownOptimizerError(
                f"cannot create OptimizerState; unknown kind: {self.kind}. "
            ) from None
        if not self.learning_rate > 0:
            raise MollifyValidationError(
                "cannot create OptimizerState; learning rate must be positive, got "
                f"{self.learning_rate}. "
            )
        if not 0 <= self.momentum < 1:
            raise MollifyValidationError(
                "cannot create OptimizerState; momentum must be in [0, 1), got "
                f"{self.momentum}. "
            )
        if not 0 < self.rms_decay < 1:
            raise MollifyValidationError(
                "cannot create OptimizerState; rms decay must be in (0, 1), got "
                f"{self.rms_decay}. "
            )

    def accumulator(self, name: str, like: Matrix) -> np.ndarray:
        """
        Get the accumulator of parameter `name`, creating a zero one shaped `like`.

        Raises `ShapeMismatchError` if an existing accumulator has another shape.
        """
        if name not in self.accumulators:
            self.accumulators[name] = np.zeros_like(like, dtype=np.float64)
        buffer = self.accumulators[name]
        if buffer.shape != like.shape:
            raise ShapeMismatchError(
                f"cannot update {name}; accumulator shape {buffer.shape} does not "
                f"match parameter shape {like.shape}. ",
                buffer.shape,
                like.shape,
            )
        return buffer

    def __repr__(self) -> str:
        return (
            f"<OptimizerState: {self.kind.value} lr={self.learning_rate} "
            f"momentum={self.momentum}>"
        )


StepFunction: TypeAlias = Callable[[Matrix, Matrix, OptimizerState, str], Matrix]

_optimizers: Dict[OptimizerKind, StepFunction] = {}


def register_optimizer(kind: OptimizerKind) -> Callable:
    """
    Decorate a step function to register it as the update rule of `kind`.

    Raises `MollifyValueError` if `kind` has already got a step function.
    """
    kind = OptimizerKind(kind)
    if kind in _optimizers:
        raise MollifyValueError(
            f"cannot register optimizer twice; {kind.value} has already got a step "
            "function. "
        )

    def wrapper(step: StepFunction) -> StepFunction:
        _optimizers[kind] = step
        return step

    return wrapper


def get_optimizer(kind: OptimizerKind) -> StepFunction:
    """
    Get the step function registered for `kind`.

    Raises `UnknownOptimizerError` if no step function has been registered.
    """
    try:
        return _optimizers[OptimizerKind(kind)]
    except (KeyError, ValueError):
        raise UnknownOptimizerError(
            f"an optimizer has not been defined for {kind}. "
        ) from None


def _validate_step(params: Matrix, grad: Matrix, name: str) -> None:
    if params.shape != grad.shape:
        raise ShapeMismatchError(
            f"cannot update {name}; gradient shape {grad.shape} does not match "
            f"parameter shape {params.shape}. ",
            params.shape,
            grad.shape,
        )
    index = first_non_finite(grad)
    if index is not None:
        raise NonFiniteValueError(
            f"cannot update {name}; gradient has a non-finite value at flat index "
            f"{index}. ",
            name,
            index,
        )


@register_optimizer(OptimizerKind.SGD_MOMENTUM)
def sgd_momentum_step(
    params: Matrix, grad: Matrix, state: OptimizerState, name: str = "params"
) -> Matrix:
    """
    Classical momentum update: v <- mu*v - lr*g; p <- p + v.
    With `state.nesterov` the parameters move by mu*v - lr*g instead.

    Raises `ShapeMismatchError` if shapes of params, grad and accumulator differ.

    Raises `NonFiniteValueError` if the gradient has non-finite entries.

    Examples:
        >>> state = OptimizerState(OptimizerKind.SGD_MOMENTUM, 0.1, momentum=0.9)
        >>> p = sgd_momentum_step(np.zeros((1, 1)), np.ones((1, 1)), state)
        >>> p = sgd_momentum_step(p, np.ones((1, 1)), state)
        >>> round(float(p[0, 0]), 10)
        -0.29
    """
    _validate_step(params, grad, name)
    velocity = state.accumulator(name, params)
    velocity *= state.momentum
    velocity -= state.learning_rate * grad
    if state.nesterov:
        return params + state.momentum * velocity - state.learning_rate * grad
    return params + velocity


@register_optimizer(OptimizerKind.RMSPROP)
def rmsprop_step(
    params: Matrix, grad: Matrix, state: OptimizerState, name: str = "params"
) -> Matrix:
    """
    RMSProp update: s <- rho*s + (1 - rho)*g^2; p <- p - lr*g/sqrt(s + eps), with
    eps = 1e-8.

    Raises `ShapeMismatchError` if shapes of params, grad and accumulator differ.

    Raises `NonFiniteValueError` if the gradient has non-finite entries.
    """
    _validate_step(params, grad, name)
    square_avg = state.accumulator(name, params)
    square_avg *= state.rms_decay
    square_avg += (1 - state.rms_decay) * grad**2
    return params - state.learning_rate * grad / np.sqrt(square_avg + RMSPROP_EPSILON)


def apply_updates(
    parameters: Dict[str, Matrix], grads: Dict[str, Matrix], state: OptimizerState
) -> None:
    """
    Update every parameter in `parameters` in place of the dictionary, visiting
    names in sorted order.

    Raises `MollifyValueError` if a parameter has no gradient.
    """
    step = get_optimizer(state.kind)
    for name in sorted(parameters):
        if name not in grads:
            raise MollifyValueError(f"cannot update {name}; gradient is missing. ")
        parameters[name] = step(parameters[name], grads[name], state, name)
