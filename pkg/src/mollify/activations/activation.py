"""
This module defines the mollified (noisy) activation of a unit and its backward pass.

For an affine input x of a unit, with f its activation and u the linearization of f:

    delta = u(x) - f(x)                       saturation gap
    sigma = (sigmoid(a * delta) - 0.5)^2      noise scale
    s     = p * c * sigma * |xi|,  xi ~ N(0, 1)
    psi   = sgn(u*(x)) * min(|u*(x)|, |f*(x) + sgn(u*(x)) * s|) + u(0)

where f*(x) = f(x) - f(0) and u*(x) = u(x) - u(0). At p = 0 psi is f; as the noise
grows psi is clamped to the linear envelope u.

ReLU units use the simpler form s = min(|x|, p * sigma * |xi|), psi = relu(x) - s.
Large noise drives psi to min(x, 0) rather than to the identity.

Backward passes differentiate the forward expression with the sampled noise held
fixed; ties of the min go to the envelope term.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from mollify.constants import HALF_NORMAL_MEAN
from mollify.activations.kinds import ActivationKind, sigmoid
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.activations import ActivationKindError, StaleRealizationError

__all__ = [
    "MollifiedActivation",
    "NoiseRealization",
    "linearize",
    "saturation_gap",
    "noise_std",
    "mollified_value",
    "relu_value",
    "noisy_activation",
    "noisy_relu",
    "expected_activation",
    "activation_backward",
]


@dataclass
class MollifiedActivation:
    """
    Activation configuration of a layer of units: the base kind, the learnable
    per-unit sharpness `a` of the noise gate and the global noise constant `c`.

    Examples:
        >>> act = MollifiedActivation(ActivationKind.SIGMOID, np.zeros(2), c=1.0)
        >>> act.u(np.array([2.0])).tolist()
        [1.0]
        >>> act.f_star(np.array([0.0])).tolist()
        [0.0]
    """

    kind: ActivationKind
    a: np.ndarray
    c: float = 1.0

    def __post_init__(self) -> None:
        try:
            self.kind = ActivationKind(self.kind)
        except ValueError:
            raise ActivationKindError(
                f"cannot create MollifiedActivation; unknown kind: {self.kind}. "
            ) from None
        self.a = np.array(self.a, dtype=np.float64).reshape(-1)
        if not self.c >= 0:
            raise MollifyValidationError(
                "cannot create MollifiedActivation; noise constant c must be "
                f"non-negative, got {self.c}. "
            )

    @classmethod
    def initialize(
        cls,
        kind: ActivationKind,
        units: int,
        rng: RngStream,
        c: float = 1.0,
        a_range: float = 2.0,
    ) -> "MollifiedActivation":
        """
        Create an activation for `units` units with `a` drawn from U[-a_range, a_range].
        """
        return cls(kind, rng.uniform(-a_range, a_range, units), c)

    @property
    def slope(self) -> float:
        return self.kind.linearize()[0]

    @property
    def offset(self) -> float:
        return self.kind.linearize()[1]

    @property
    def units(self) -> int:
        return self.a.size

    def f(self, x: np.ndarray) -> np.ndarray:
        return self.kind(x)

    def u(self, x: np.ndarray) -> np.ndarray:
        return self.slope * x + self.offset

    def f_star(self, x: np.ndarray) -> np.ndarray:
        return self.kind(x) - self.offset

    def u_star(self, x: np.ndarray) -> np.ndarray:
        return self.slope * x


@dataclass
class NoiseRealization:
    """
    The noise sampled by a forward call, kept so the backward pass can reuse it.

    `abs_xi` is |xi| during training and the constant E|xi| = sqrt(2/pi) during
    inference; `s` is the scaled noise actually applied.
    """

    act: MollifiedActivation
    p: float
    abs_xi: np.ndarray
    s: np.ndarray
    xi: Optional[np.ndarray] = None


def linearize(kind: ActivationKind) -> Tuple[float, float]:
    """
    Return (f'(0), f(0)) of `kind`, defining its linearization u(x).

    Examples:
        >>> linearize(ActivationKind.TANH)
        (1.0, 0.0)
    """
    return ActivationKind(kind).linearize()


def saturation_gap(x: np.ndarray, act: MollifiedActivation) -> np.ndarray:
    """
    delta = u(x) - f(x), elementwise.

    Examples:
        >>> act = MollifiedActivation(ActivationKind.SIGMOID, np.zeros(1))
        >>> round(float(saturation_gap(np.array([4.0]), act)[0]), 5)
        0.51799
    """
    return act.u(x) - act.f(x)


def _sigmoid_gate(x: np.ndarray, act: MollifiedActivation):
    delta = saturation_gap(x, act)
    gate = sigmoid(act.a * delta)
    return delta, gate


def noise_std(x: np.ndarray, act: MollifiedActivation) -> np.ndarray:
    """
    sigma(x) = (sigmoid(a * delta) - 0.5)^2, always in [0, 0.25).
    """
    _, gate = _sigmoid_gate(x, act)
    return (gate - 0.5) ** 2


def mollified_value(
    x: np.ndarray, s: np.ndarray, act: MollifiedActivation
) -> np.ndarray:
    """
    psi for a given non-negative scaled noise `s`.

    Examples:
        >>> act = MollifiedActivation(ActivationKind.SIGMOID, np.zeros(1))
        >>> mollified_value(np.array([2.0]), np.array([10.0]), act).tolist()
        [1.0]
    """
    u_star = act.u_star(x)
    direction = np.sign(u_star)
    envelope = np.abs(u_star)
    inner = np.abs(act.f_star(x) + direction * s)
    return direction * np.minimum(envelope, inner) + act.offset


def relu_value(x: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """
    relu(x) - min(|x|, noise) for a non-negative noise magnitude.

    Examples:
        >>> relu_value(np.array([-1.0, 2.0]), np.array([1e9, 1e9])).tolist()
        [-1.0, 0.0]
    """
    return np.maximum(x, 0.0) - np.minimum(np.abs(x), noise)


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise MollifyValueError(
            f"cannot apply noisy activation; p must be in [0, 1], got {p}. "
        )


def _forward(
    x: np.ndarray,
    p: float,
    act: MollifiedActivation,
    abs_xi: np.ndarray,
    xi: Optional[np.ndarray],
) -> Tuple[np.ndarray, NoiseRealization]:
    if act.kind is ActivationKind.RELU:
        s = np.minimum(np.abs(x), p * noise_std(x, act) * abs_xi)
        value = np.maximum(x, 0.0) - s
    else:
        s = p * act.c * noise_std(x, act) * abs_xi
        value = mollified_value(x, s, act)
    return value, NoiseRealization(act, p, abs_xi, s, xi)


def noisy_activation(
    x: np.ndarray, p: float, act: MollifiedActivation, rng: RngStream
) -> Tuple[np.ndarray, NoiseRealization]:
    """
    Sample xi ~ N(0, 1) per entry of `x` and return (psi(x), realization).

    ReLU activations use the simpler ReLU form (see `noisy_relu`).

    Raises `MollifyValueError` if `p` is not within [0, 1].
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64)
    xi = rng.standard_normal(x.shape)
    return _forward(x, p, act, np.abs(xi), xi)


def noisy_relu(
    x: np.ndarray, p: float, act: MollifiedActivation, rng: RngStream
) -> Tuple[np.ndarray, NoiseRealization]:
    """
    s = min(|x|, p * sigma(x) * |xi|); psi = relu(x) - s.

    Raises `ActivationKindError` if the activation is not a relu.
    """
    if act.kind is not ActivationKind.RELU:
        raise ActivationKindError(
            f"cannot apply noisy relu to a {act.kind.value} activation. "
        )
    return noisy_activation(x, p, act, rng)


def expected_activation(
    x: np.ndarray, p: float, act: MollifiedActivation
) -> Tuple[np.ndarray, NoiseRealization]:
    """
    Deterministic counterpart of `noisy_activation`: |xi| is replaced by its mean
    sqrt(2/pi).
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64)
    return _forward(x, p, act, np.full(x.shape, HALF_NORMAL_MEAN), None)


def activation_backward(
    realization: NoiseRealization, x: np.ndarray, upstream: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of sum(upstream * psi(x)) with respect to x and to the per-unit `a`,
    holding the realization fixed. Gradients of `a` are summed over the batch rows.

    Raises `StaleRealizationError` if the realization was sampled for another shape.
    """
    if realization.s.shape != np.shape(x) or np.shape(upstream) != np.shape(x):
        raise StaleRealizationError(
            f"cannot backpropagate; realization shape {realization.s.shape} does not "
            f"match input shape {np.shape(x)} and upstream shape "
            f"{np.shape(upstream)}. "
        )
    act = realization.act
    delta, gate = _sigmoid_gate(x, act)
    # d sigma / d(a * delta)
    dsigma = 2.0 * (gate - 0.5) * gate * (1.0 - gate)
    dsigma_ddelta = dsigma * act.a
    dsigma_da = dsigma * delta

    if act.kind is ActivationKind.RELU:
        noise_scale = realization.p * realization.abs_xi
        capped = np.abs(x) <= noise_scale * (gate - 0.5) ** 2
        ddelta_dx = np.where(x < 0.0, 1.0, 0.0)
        grad_x = np.where(
            capped,
            np.where(x < 0.0, 1.0, 0.0),
            act.kind.derivative(x) - noise_scale * dsigma_ddelta * ddelta_dx,
        )
        grad_a = np.where(capped, 0.0, -noise_scale * dsigma_da)
    else:
        noise_scale = realization.p * act.c * realization.abs_xi
        u_star = act.u_star(x)
        direction = np.sign(u_star)
        inner_arg = act.f_star(x) + direction * realization.s
        envelope_active = np.abs(u_star) <= np.abs(inner_arg)
        ds_dx = noise_scale * dsigma_ddelta * (act.slope - act.kind.derivative(x))
        branch = direction * np.sign(inner_arg)
        grad_x = np.where(
            envelope_active,
            act.slope,
            branch * (act.kind.derivative(x) + direction * ds_dx),
        )
        grad_a = np.where(
            envelope_active, 0.0, branch * direction * noise_scale * dsigma_da
        )

    grad_x = grad_x * upstream
    grad_a = grad_a * upstream
    if grad_a.ndim == 2:
        grad_a = grad_a.sum(axis=0)
    return grad_x, grad_a
