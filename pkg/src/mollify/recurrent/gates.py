"""
This module defines mollified hard-sigmoid gates.

A gate with target gamma adds half-normal noise along a pseudo-input that points from
its pre-activation x to f^-1(gamma):

    i(x) = (f^-1(gamma) - x) / E|xi|
    psi  = f(x + p * i(x) * |xi|)

so that, inside the linear region of the hard-sigmoid, E[psi] = gamma at p = 1 and
psi = f(x) at p = 0. In inference mode |xi| is replaced by E|xi| = sqrt(2/pi).

Gate targets follow the annealing step t, not the position in the sequence.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from mollify.constants import HALF_NORMAL_MEAN
from mollify.activations.kinds import ActivationKind, hard_sigmoid, hard_sigmoid_inverse
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValueError
from mollify.exceptions.activations import StaleRealizationError
from mollify.exceptions.recurrent import GateTargetError

__all__ = [
    "ScheduleRole",
    "GateSpec",
    "GateRealization",
    "gate_pseudo_input",
    "mollified_gate",
    "expected_gate",
    "gate_forward",
    "gate_backward",
]


class ScheduleRole(str, Enum):
    """
    How the target of a gate evolves with the annealing step t.
    """

    CONSTANT_ONE = "constant-1"
    INVERSE_T = "1/t"
    COMPLEMENT_INVERSE_T = "1-1/t"
    FREE = "free"


@dataclass(frozen=True)
class GateSpec:
    """
    Target schedule of a gate. Free gates have no target and are plain
    hard-sigmoids.

    Examples:
        >>> GateSpec(ScheduleRole.INVERSE_T).target(4)
        0.25
        >>> GateSpec("free").target(4) is None
        True
    """

    role: ScheduleRole

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", ScheduleRole(self.role))

    def target(self, t: int) -> Optional[float]:
        """
        Gate target gamma at annealing step `t` (t >= 1).

        Raises `MollifyValueError` if t < 1.
        """
        if t < 1:
            raise MollifyValueError(
                f"cannot compute gate target; annealing step must be >= 1, got {t}. "
            )
        if self.role is ScheduleRole.CONSTANT_ONE:
            return 1.0
        if self.role is ScheduleRole.INVERSE_T:
            return 1.0 / t
        if self.role is ScheduleRole.COMPLEMENT_INVERSE_T:
            return 1.0 - 1.0 / t
        return None


@dataclass
class GateRealization:
    """
    The pre-activation, target and half-normal noise magnitudes of a gate
    evaluation; `gamma` is None for free gates.
    """

    x: np.ndarray
    gamma: Optional[float]
    p: float
    abs_xi: Optional[np.ndarray]
    z: np.ndarray


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise GateTargetError(
            f"cannot pin gate; target {gamma} is outside the hard-sigmoid range "
            "[0, 1]. "
        )


def gate_pseudo_input(x: np.ndarray, gamma: float) -> np.ndarray:
    """
    (f^-1(gamma) - x) / sqrt(2/pi) with f the hard-sigmoid.

    Raises `GateTargetError` if gamma is not within [0, 1].

    Examples:
        >>> values = gate_pseudo_input(np.array([0.0, 1.0]), 0.75)
        >>> [round(float(v), 5) for v in values]
        [1.25331, 0.0]
    """
    _check_gamma(gamma)
    return (hard_sigmoid_inverse(gamma) - np.asarray(x, dtype=np.float64)) / (
        HALF_NORMAL_MEAN
    )


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise MollifyValueError(f"cannot apply gate; p must be in [0, 1], got {p}. ")


def _pinned(
    x: np.ndarray, gamma: float, p: float, abs_xi: np.ndarray
) -> Tuple[np.ndarray, GateRealization]:
    z = x + p * gate_pseudo_input(x, gamma) * abs_xi
    return hard_sigmoid(z), GateRealization(x, gamma, p, abs_xi, z)


def mollified_gate(
    x: np.ndarray, gamma: float, p: float, rng: RngStream
) -> np.ndarray:
    """
    Sample |xi| per entry of `x` and return hard-sigmoid(x + p * i(x) * |xi|).

    Raises `MollifyValueError` if p is not within [0, 1].

    Raises `GateTargetError` if gamma is not within [0, 1].
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64)
    value, _ = _pinned(x, gamma, p, np.abs(rng.standard_normal(x.shape)))
    return value


def expected_gate(x: np.ndarray, gamma: float, p: float) -> np.ndarray:
    """
    Deterministic gate with |xi| replaced by sqrt(2/pi).

    Examples:
        >>> values = expected_gate(np.array([-0.5, 0.5]), 0.25, 1.0)
        >>> [round(float(v), 12) for v in values]
        [0.25, 0.25]
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64)
    value, _ = _pinned(x, gamma, p, np.full(x.shape, HALF_NORMAL_MEAN))
    return value


def gate_forward(
    x: np.ndarray,
    spec: GateSpec,
    p: float,
    t: int,
    rng: Optional[RngStream],
) -> Tuple[np.ndarray, GateRealization]:
    """
    Evaluate a gate following its schedule. Without `rng` the gate runs in inference
    mode.
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64)
    gamma = spec.target(t)
    if gamma is None:
        return hard_sigmoid(x), GateRealization(x, None, p, None, x)
    if rng is None:
        abs_xi = np.full(x.shape, HALF_NORMAL_MEAN)
    else:
        abs_xi = np.abs(rng.standard_normal(x.shape))
    return _pinned(x, gamma, p, abs_xi)


def gate_backward(realization: GateRealization, upstream: np.ndarray) -> np.ndarray:
    """
    Gradient of sum(upstream * gate) with respect to the pre-activation, holding the
    sampled noise fixed.

    Raises `StaleRealizationError` if `upstream` does not match the gate's shape.
    """
    if np.shape(upstream) != realization.x.shape:
        raise StaleRealizationError(
            f"cannot backpropagate gate; upstream shape {np.shape(upstream)} does not "
            f"match gate shape {realization.x.shape}. "
        )
    slope = ActivationKind.HARD_SIGMOID.derivative(realization.z)
    if realization.gamma is not None:
        slope = slope * (1.0 - realization.p * realization.abs_xi / HALF_NORMAL_MEAN)
    return slope * upstream
