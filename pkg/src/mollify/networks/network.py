"""
This module assembles mollified layers and an output head into a network and defines
its training forward pass, its backward pass at the sampled realization and its
deterministic inference pass.

Parameters are addressed by dotted names: `layers.<i>.<W|b|a|P>` and `head.<V|d>`.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from mollify.activations.activation import MollifiedActivation
from mollify.activations.kinds import ActivationKind
from mollify.annealing.schedule import AnnealState, layer_probabilities
from mollify.networks.heads import Head, HeadKind
from mollify.networks.layer import (
    AdapterKind,
    LayerCache,
    MollifiedLayer,
    layer_backward,
    layer_forward_infer,
    layer_forward_train,
)
from mollify.numerics.matrix import Matrix
from mollify.numerics.rng import RngStream
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.networks import NonFiniteLossError

__all__ = [
    "MollifiedNetwork",
    "ForwardRecord",
    "network_forward",
    "network_backward",
    "network_loss_and_grads",
    "network_infer",
]

Probabilities = Union[AnnealState, Sequence[float]]
NoiseSource = Union[RngStream, Sequence[RngStream]]


@dataclass
class MollifiedNetwork:
    """
    A stack of mollified layers followed by a head.
    """

    layers: List[MollifiedLayer]
    head: Head

    def __post_init__(self) -> None:
        for previous, layer in zip(self.layers, self.layers[1:]):
            if previous.fan_out != layer.fan_in:
                raise MollifyValidationError(
                    f"cannot create MollifiedNetwork; layer {previous.index} has "
                    f"fan-out {previous.fan_out} but layer {layer.index} has fan-in "
                    f"{layer.fan_in}. "
                )

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        hidden: int,
        depth: int,
        kind: ActivationKind,
        head_kind: HeadKind,
        outputs: int,
        rng: RngStream,
        c: float = 1.0,
        residual: bool = False,
        adapter: Optional[AdapterKind] = None,
        a_range: float = 2.0,
    ) -> "MollifiedNetwork":
        """
        Create `depth` hidden layers of width `hidden` on top of `input_dim` inputs.
        Each layer initializes from its own sub-stream of `rng`.
        """
        if depth < 1 or hidden < 1 or input_dim < 1:
            raise MollifyValidationError(
                "cannot create MollifiedNetwork; depth, width and input dimension "
                "must be positive. "
            )
        streams = rng.spawn(depth + 1)
        layers = []
        fan_in = input_dim
        for position in range(depth):
            layers.append(
                MollifiedLayer.initialize(
                    fan_in,
                    hidden,
                    kind,
                    streams[position],
                    c=c,
                    adapter=adapter if fan_in != hidden else None,
                    residual=residual,
                    index=position + 1,
                    a_range=a_range,
                )
            )
            fan_in = hidden
        head = Head.initialize(head_kind, hidden, outputs, streams[-1])
        return cls(layers, head)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def named_parameters(self) -> Dict[str, np.ndarray]:
        params = {}
        for position, layer in enumerate(self.layers):
            for name, value in layer.parameters().items():
                params[f"layers.{position}.{name}"] = value
        for name, value in self.head.parameters().items():
            params[f"head.{name}"] = value
        return params

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        parts = name.split(".")
        if parts[0] == "head" and len(parts) == 2:
            self.head.set_parameter(parts[1], value)
        elif parts[0] == "layers" and len(parts) == 3:
            self.layers[int(parts[1])].set_parameter(parts[2], value)
        else:
            raise MollifyValidationError(f"cannot set parameter {name!r}. ")

    def set_noise_constant(self, c: float) -> None:
        for layer in self.layers:
            layer.act.c = c

    def describe(self) -> Dict[str, Any]:
        """
        Structure of the network without its parameter values, as stored in
        checkpoints.
        """
        return {
            "type": "feedforward",
            "layers": [
                {
                    "fan_in": layer.fan_in,
                    "fan_out": layer.fan_out,
                    "kind": layer.act.kind.value,
                    "c": layer.act.c,
                    "adapter": layer.adapter.value,
                    "residual": layer.residual,
                }
                for layer in self.layers
            ],
            "head": {
                "kind": self.head.kind.value,
                "fan_in": self.head.V.shape[0],
                "outputs": self.head.outputs,
            },
        }

    @classmethod
    def from_description(
        cls, model: Dict[str, Any], parameters: Dict[str, np.ndarray]
    ) -> "MollifiedNetwork":
        """
        Rebuild a network from `describe()` output and named parameter values.

        Raises `KeyError` if a parameter the structure requires is missing.
        """
        layers = []
        for position, spec in enumerate(model["layers"]):
            prefix = f"layers.{position}."
            adapter = AdapterKind(spec["adapter"])
            act = MollifiedActivation(spec["kind"], parameters[prefix + "a"], spec["c"])
            projection = (
                parameters[prefix + "P"] if adapter is AdapterKind.PROJECTION else None
            )
            layers.append(
                MollifiedLayer(
                    parameters[prefix + "W"],
                    parameters[prefix + "b"],
                    act,
                    adapter,
                    projection,
                    spec["residual"],
                    position + 1,
                )
            )
        head = Head(model["head"]["kind"], parameters["head.V"], parameters["head.d"])
        return cls(layers, head)


@dataclass
class ForwardRecord:
    """
    Result of a training forward pass.
    """

    loss: float
    outputs: Matrix
    hidden: Matrix
    caches: List[LayerCache] = field(default_factory=list)


def _probabilities(anneal: Probabilities, depth: int) -> List[float]:
    if isinstance(anneal, AnnealState):
        probabilities = layer_probabilities(anneal)
    else:
        probabilities = [float(p) for p in anneal]
    if len(probabilities) != depth:
        raise MollifyValueError(
            f"cannot run network; got {len(probabilities)} skip probabilities for "
            f"{depth} layers. "
        )
    return probabilities


def _streams(rng: NoiseSource, depth: int) -> Sequence[RngStream]:
    if isinstance(rng, RngStream):
        return rng.spawn(depth)
    if len(rng) != depth:
        raise MollifyValueError(
            f"cannot run network; got {len(rng)} noise streams for {depth} layers. "
        )
    return rng


def _check_finite(h: Matrix, position: int) -> None:
    if not np.isfinite(h).all():
        raise NonFiniteLossError(
            f"forward pass produced a non-finite value at layer {position}. ",
            position,
        )


def network_forward(
    batch: Matrix,
    targets: np.ndarray,
    net: MollifiedNetwork,
    anneal: Probabilities,
    rng: NoiseSource,
) -> ForwardRecord:
    """
    Stochastic forward pass. Layer l draws its noise and skip mask from its own
    stream, so draws do not depend on the evaluation order of layers.

    `anneal` is an annealing state or one skip probability per layer; `rng` is one
    stream per layer or a stream to spawn them from.

    Raises `NonFiniteLossError` with the index of the first layer whose output is not
    finite, or with no index if the loss itself is not finite.
    """
    probabilities = _probabilities(anneal, net.depth)
    streams = _streams(rng, net.depth)
    h = batch
    caches = []
    for position, layer in enumerate(net.layers):
        h, cache = layer_forward_train(
            h, layer, probabilities[position], streams[position]
        )
        _check_finite(h, position)
        caches.append(cache)
    outputs = net.head.forward(h)
    loss, _ = net.head.loss(outputs, targets)
    if not np.isfinite(loss):
        raise NonFiniteLossError("forward pass produced a non-finite loss. ")
    return ForwardRecord(loss, outputs, h, caches)


def network_backward(
    record: ForwardRecord, targets: np.ndarray, net: MollifiedNetwork
) -> Dict[str, np.ndarray]:
    """
    Gradients of the mean batch loss at the realization sampled by `record`.
    """
    _, grad_outputs = net.head.loss(record.outputs, targets)
    grad_h, head_grads = net.head.backward(record.hidden, grad_outputs)
    grads = {f"head.{name}": value for name, value in head_grads.items()}
    for position in reversed(range(net.depth)):
        grad_h, layer_grads = layer_backward(
            grad_h, record.caches[position], net.layers[position]
        )
        for name, value in layer_grads.items():
            grads[f"layers.{position}.{name}"] = value
    return grads


def network_loss_and_grads(
    batch: Matrix,
    targets: np.ndarray,
    net: MollifiedNetwork,
    anneal: Probabilities,
    rng: NoiseSource,
):
    """
    Return (mean loss, gradients by parameter name) of one stochastic pass.
    """
    record = network_forward(batch, targets, net, anneal, rng)
    return record.loss, network_backward(record, targets, net)


def network_infer(
    batch: Matrix, net: MollifiedNetwork, anneal: Probabilities
) -> Matrix:
    """
    Deterministic head outputs with every random variable replaced by its mean.
    """
    probabilities = _probabilities(anneal, net.depth)
    h = batch
    for position, layer in enumerate(net.layers):
        h = layer_forward_infer(h, layer, probabilities[position])
        _check_finite(h, position)
    return net.head.forward(h)
