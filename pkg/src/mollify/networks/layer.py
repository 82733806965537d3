"""
This module defines the mollified feed-forward layer.

Every unit of a layer either copies the (adapted) activation of the previous layer,
the identity path, or outputs the noisy activation of an affine transformation of
it. The choice is a Bernoulli(p) draw per unit and per example:

    x   = h_prev W + b
    phi = pi * adapt(h_prev) + (1 - pi) * psi(x)

At p = 1 a layer is the identity (up to its dimension adapter); at p = 0 it is the
plain noiseless layer. In inference mode pi is replaced by p and |xi| by its mean.
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
from mollify.numerics.matrix import Matrix, Vector
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValidationError
from mollify.exceptions.numerics import ShapeMismatchError
from mollify.exceptions.networks import AdapterError, WeightNoiseError

__all__ = [
    "AdapterKind",
    "SkipMask",
    "WeightNoiseConfig",
    "LayerCache",
    "MollifiedLayer",
    "glorot_uniform",
    "adapt",
    "adapt_backward",
    "layer_forward_train",
    "layer_forward_infer",
    "layer_backward",
    "weight_noise_forward",
]


class AdapterKind(str, Enum):
    """
    How the identity path matches the previous layer's width to this layer's width.
    """

    NONE = "none"
    ZERO_PAD = "zero-pad"
    PROJECTION = "linear-projection"


@dataclass
class SkipMask:
    """
    Binary path decisions, one per example and output unit; 1 selects the identity
    path.

    Examples:
        >>> SkipMask.sample(1.0, (1, 3), RngStream(0)).pi.tolist()
        [[1.0, 1.0, 1.0]]
    """

    pi: np.ndarray

    def __post_init__(self) -> None:
        if not np.isin(self.pi, (0.0, 1.0)).all():
            raise MollifyValidationError(
                "cannot create SkipMask; entries must be 0 or 1. "
            )

    @classmethod
    def sample(cls, p: float, shape: Tuple[int, int], rng: RngStream) -> "SkipMask":
        return cls(rng.bernoulli(p, shape))


@dataclass
class WeightNoiseConfig:
    """
    Gaussian weight noise N(mu, sigma^2) subtracted from the weights of a layer.
    """

    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not self.sigma >= 0:
            raise WeightNoiseError(
                "cannot create WeightNoiseConfig; sigma must be non-negative, got "
                f"{self.sigma}. "
            )


def glorot_uniform(fan_in: int, fan_out: int, rng: RngStream) -> Matrix:
    """
    Weights drawn from U[-r, r] with r = sqrt(6 / (fan_in + fan_out)).
    """
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


@dataclass
class MollifiedLayer:
    """
    Affine weights `W` (fan-in x fan-out) and bias `b`, the layer's mollified
    activation, and the identity-path state: the dimension adapter, its optional
    projection matrix and the optional residual flag.

    `index` is the 1-based position of the layer in its stack; the skip probability
    of the layer is read from the annealing state with it.
    """

    W: Matrix
    b: Vector
    act: MollifiedActivation
    adapter: AdapterKind = AdapterKind.NONE
    projection: Optional[Matrix] = None
    residual: bool = False
    index: int = 1

    def __post_init__(self) -> None:
        self.adapter = AdapterKind(self.adapter)
        self.W = np.array(self.W, dtype=np.float64)
        self.b = np.array(self.b, dtype=np.float64).reshape(-1)
        if self.W.ndim != 2 or self.b.size != self.fan_out:
            raise ShapeMismatchError(
                f"cannot create MollifiedLayer; weight shape {self.W.shape} does not "
                f"match bias shape {self.b.shape}. ",
                self.W.shape,
                self.b.shape,
            )
        if self.act.units != self.fan_out:
            raise ShapeMismatchError(
                f"cannot create MollifiedLayer; activation has {self.act.units} units "
                f"but the layer has {self.fan_out}. ",
                (self.act.units,),
                (self.fan_out,),
            )
        if self.adapter is AdapterKind.NONE and self.fan_in != self.fan_out:
            raise AdapterError(
                f"cannot create MollifiedLayer; fan-in {self.fan_in} differs from "
                f"fan-out {self.fan_out} and no adapter is configured. "
            )
        if self.adapter is AdapterKind.ZERO_PAD and self.fan_in > self.fan_out:
            raise AdapterError(
                f"cannot create MollifiedLayer; zero-padding cannot shrink fan-in "
                f"{self.fan_in} to fan-out {self.fan_out}. "
            )
        if self.adapter is AdapterKind.PROJECTION:
            if self.projection is None:
                raise AdapterError(
                    "cannot create MollifiedLayer; linear-projection adapter without "
                    "a projection matrix. "
                )
            self.projection = np.array(self.projection, dtype=np.float64)
            if self.projection.shape != self.W.shape:
                raise AdapterError(
                    f"cannot create MollifiedLayer; projection shape "
                    f"{self.projection.shape} does not map fan-in {self.fan_in} to "
                    f"fan-out {self.fan_out}. "
                )

    @classmethod
    def initialize(
        cls,
        fan_in: int,
        fan_out: int,
        kind: ActivationKind,
        rng: RngStream,
        c: float = 1.0,
        adapter: Optional[AdapterKind] = None,
        residual: bool = False,
        index: int = 1,
        a_range: float = 2.0,
    ) -> "MollifiedLayer":
        """
        Create a layer with Glorot-uniform weights, zero bias and `a` drawn from
        U[-a_range, a_range].

        Without an explicit adapter, equal widths need none, growing widths are
        zero-padded and shrinking widths get a Glorot-initialized projection.
        """
        if adapter is None:
            if fan_in == fan_out:
                adapter = AdapterKind.NONE
            elif fan_in < fan_out:
                adapter = AdapterKind.ZERO_PAD
            else:
                adapter = AdapterKind.PROJECTION
        adapter = AdapterKind(adapter)
        weights = glorot_uniform(fan_in, fan_out, rng)
        act = MollifiedActivation.initialize(kind, fan_out, rng, c, a_range)
        projection = (
            glorot_uniform(fan_in, fan_out, rng)
            if adapter is AdapterKind.PROJECTION
            else None
        )
        return cls(
            weights,
            np.zeros(fan_out),
            act,
            adapter,
            projection,
            residual,
            index,
        )

    @property
    def fan_in(self) -> int:
        return self.W.shape[0]

    @property
    def fan_out(self) -> int:
        return self.W.shape[1]

    def parameters(self) -> Dict[str, np.ndarray]:
        """
        Trainable parameters by name: W, b, a and, for projection adapters, P.
        """
        params = {"W": self.W, "b": self.b, "a": self.act.a}
        if self.projection is not None:
            params["P"] = self.projection
        return params

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        if name == "W":
            self.W = value
        elif name == "b":
            self.b = value
        elif name == "a":
            self.act.a = value
        elif name == "P" and self.projection is not None:
            self.projection = value
        else:
            raise MollifyValidationError(
                f"cannot set parameter {name!r}; layer has no such parameter. "
            )


@dataclass
class LayerCache:
    """
    Everything a training forward pass sampled or computed that backward needs.
    """

    h_prev: Matrix
    x: Matrix
    mask: np.ndarray
    realization: NoiseRealization
    extras: Dict[str, np.ndarray] = field(default_factory=dict)


def _check_input(h_prev: Matrix, layer: MollifiedLayer) -> None:
    if h_prev.ndim != 2 or h_prev.shape[1] != layer.fan_in:
        raise ShapeMismatchError(
            f"cannot forward through layer {layer.index}; input shape "
            f"{h_prev.shape} does not match fan-in {layer.fan_in}. ",
            tuple(h_prev.shape),
            (layer.fan_in,),
        )


def adapt(h_prev: Matrix, layer: MollifiedLayer) -> Matrix:
    """
    Map the previous layer's activation to this layer's width.

    Examples:
        >>> from mollify.activations import MollifiedActivation, ActivationKind
        >>> act = MollifiedActivation(ActivationKind.SIGMOID, np.zeros(4))
        >>> layer = MollifiedLayer(np.zeros((2, 4)), np.zeros(4), act, "zero-pad")
        >>> adapt(np.array([[1.0, 2.0]]), layer).tolist()
        [[1.0, 2.0, 0.0, 0.0]]
    """
    _check_input(h_prev, layer)
    if layer.adapter is AdapterKind.NONE:
        return h_prev
    if layer.adapter is AdapterKind.ZERO_PAD:
        padding = layer.fan_out - layer.fan_in
        return np.pad(h_prev, ((0, 0), (0, padding)))
    return h_prev @ layer.projection


def adapt_backward(
    grad: Matrix, h_prev: Matrix, layer: MollifiedLayer
) -> Tuple[Matrix, Optional[Matrix]]:
    """
    Return the gradient with respect to h_prev and, for projections, to P.
    """
    if layer.adapter is AdapterKind.NONE:
        return grad, None
    if layer.adapter is AdapterKind.ZERO_PAD:
        return grad[:, : layer.fan_in], None
    return grad @ layer.projection.T, h_prev.T @ grad


def layer_forward_train(
    h_prev: Matrix, layer: MollifiedLayer, p: float, rng: RngStream
) -> Tuple[Matrix, LayerCache]:
    """
    Stochastic forward pass: sample the activation noise, then the skip mask, and
    mix the identity and noisy-nonlinear paths per unit.

    Raises `ShapeMismatchError` if `h_prev` does not have fan-in columns.
    """
    _check_input(h_prev, layer)
    x = h_prev @ layer.W + layer.b
    candidate, realization = noisy_activation(x, p, layer.act, rng)
    mask = SkipMask.sample(p, x.shape, rng).pi
    adapted = adapt(h_prev, layer)
    if layer.residual:
        h = adapted + (1.0 - mask) * candidate
    else:
        h = mask * adapted + (1.0 - mask) * candidate
    return h, LayerCache(h_prev, x, mask, realization)


def layer_forward_infer(h_prev: Matrix, layer: MollifiedLayer, p: float) -> Matrix:
    """
    Deterministic forward pass: the skip mask is replaced by its mean p and |xi| by
    E|xi| = sqrt(2/pi).
    """
    _check_input(h_prev, layer)
    x = h_prev @ layer.W + layer.b
    candidate, _ = expected_activation(x, p, layer.act)
    adapted = adapt(h_prev, layer)
    if layer.residual:
        return adapted + (1.0 - p) * candidate
    return p * adapted + (1.0 - p) * candidate


def layer_backward(
    grad_h: Matrix, cache: LayerCache, layer: MollifiedLayer
) -> Tuple[Matrix, Dict[str, np.ndarray]]:
    """
    Backward pass of `layer_forward_train` at the cached realization.

    Masked units (pi = 1) pass no gradient to W, b or a; the identity path passes
    the upstream gradient through unchanged.
    """
    keep = 1.0 - cache.mask
    grad_candidate = keep * grad_h
    grad_adapted = grad_h if layer.residual else cache.mask * grad_h
    grad_x, grad_a = activation_backward(cache.realization, cache.x, grad_candidate)
    grads = {
        "W": cache.h_prev.T @ grad_x,
        "b": grad_x.sum(axis=0),
        "a": grad_a,
    }
    grad_identity, grad_projection = adapt_backward(grad_adapted, cache.h_prev, layer)
    if grad_projection is not None:
        grads["P"] = grad_projection
    return grad_x @ layer.W.T + grad_identity, grads


def weight_noise_forward(
    h_prev: Matrix,
    layer: MollifiedLayer,
    cfg: WeightNoiseConfig,
    rng: RngStream,
) -> Matrix:
    """
    h = f(h_prev (W - xi) + b) with xi ~ N(mu, sigma^2) drawn fresh per call,
    elementwise over W and shared by the batch.
    """
    _check_input(h_prev, layer)
    noise = rng.normal(cfg.mu, cfg.sigma, layer.W.shape)
    return layer.act.f(h_prev @ (layer.W - noise) + layer.b)
