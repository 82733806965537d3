"""
This module defines the per-layer skip/noise schedule coupled to a moving average of
the loss:

    p^l_t = 1 - exp(-k * v_t * l / (t * L))

High loss keeps the network close to the identity, low loss lets it become
non-linear; lower layers anneal faster. Annealing stops for good once the sum of
the layer probabilities falls to the threshold delta.

The sum is what is usually called the expected depth, although it counts the layers
expected to be skipped.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from mollify.exceptions.annealing import AnnealStateError, NonFiniteLossAverageError

__all__ = [
    "AverageKind",
    "AnnealState",
    "schedule_p",
    "layer_probabilities",
    "update_loss_average",
    "expected_skip",
]

logger = logging.getLogger(__name__)

# p stays strictly below 1 even when exp underflows.
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


class AverageKind(str, Enum):
    EXPONENTIAL = "exponential"
    WINDOW = "window"


@dataclass
class AnnealState:
    """
    Annealing state: schedule sharpness `k`, layer count `num_layers`, update
    counter `t`, loss moving average `v` (None until the first loss arrives), EMA
    decay `beta` or window size `window`, stop threshold `delta` (defaults to
    0.05 * num_layers) and the absorbing `frozen` flag.

    Examples:
        >>> state = AnnealState(k=1.0, num_layers=2, v=1.0)
        >>> [round(schedule_p(state, l), 5) for l in (1, 2)]
        [0.39347, 0.63212]
    """

    k: float
    num_layers: int
    t: int = 1
    v: Optional[float] = None
    beta: float = 0.9
    delta: Optional[float] = None
    frozen: bool = False
    average: AverageKind = AverageKind.EXPONENTIAL
    window: int = 10
    history: List[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.average = AverageKind(self.average)
        if self.delta is None:
            self.delta = 0.05 * self.num_layers
        if not self.k >= 0:
            raise AnnealStateError(
                f"cannot create AnnealState; k must be non-negative, got {self.k}. "
            )
        if self.num_layers < 1 or self.t < 1:
            raise AnnealStateError(
                "cannot create AnnealState; layer count and update counter must be at "
                f"least 1, got {self.num_layers} and {self.t}. "
            )
        if not 0 <= self.beta < 1:
            raise AnnealStateError(
                f"cannot create AnnealState; beta must be in [0, 1), got {self.beta}. "
            )
        if self.window < 1 or not self.delta >= 0:
            raise AnnealStateError(
                "cannot create AnnealState; window must be positive and delta "
                "non-negative. "
            )
        if self.v is not None and not (math.isfinite(self.v) and self.v >= 0):
            raise AnnealStateError(
                f"cannot create AnnealState; invalid loss average: {self.v}. "
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "num_layers": self.num_layers,
            "t": self.t,
            "v": self.v,
            "beta": self.beta,
            "delta": self.delta,
            "frozen": self.frozen,
            "average": self.average.value,
            "window": self.window,
            "history": list(self.history),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AnnealState":
        try:
            return cls(**data)
        except TypeError as exc:
            raise AnnealStateError(f"cannot restore AnnealState; {exc}. ") from None


def schedule_p(state: AnnealState, l: int) -> float:
    """
    Skip probability of layer `l` (1-based) at the current update; 0 once frozen or
    before any loss has been averaged.

    Raises `AnnealStateError` if `l` is not within 1..num_layers.

    Examples:
        >>> schedule_p(AnnealState(k=0.0, num_layers=3, v=5.0), 3)
        0.0
    """
    if not 1 <= l <= state.num_layers:
        raise AnnealStateError(
            f"cannot schedule layer {l}; expected a layer within "
            f"1..{state.num_layers}. "
        )
    if state.frozen or state.v is None:
        return 0.0
    rate = state.k * state.v * l / (state.t * state.num_layers)
    return min(-math.expm1(-rate), _BELOW_ONE)


def layer_probabilities(state: AnnealState) -> List[float]:
    """
    [p^1_t, ..., p^L_t].
    """
    return [schedule_p(state, l) for l in range(1, state.num_layers + 1)]


def update_loss_average(state: AnnealState, loss: float) -> AnnealState:
    """
    Feed `loss` to the moving average and advance the update counter. The first loss
    initializes the average.

    Raises `NonFiniteLossAverageError` if `loss` is negative or not finite.

    Examples:
        >>> state = AnnealState(k=1.0, num_layers=1, beta=0.9)
        >>> state = update_loss_average(update_loss_average(state, 1.0), 0.0)
        >>> round(state.v, 12), state.t
        (0.9, 3)
    """
    if not (math.isfinite(loss) and loss >= 0):
        raise NonFiniteLossAverageError(
            f"cannot update loss average; invalid loss: {loss}. "
        )
    if state.average is AverageKind.WINDOW:
        state.history.append(float(loss))
        del state.history[: -state.window]
        state.v = math.fsum(state.history) / len(state.history)
    elif state.v is None:
        state.v = float(loss)
    else:
        state.v = state.beta * state.v + (1 - state.beta) * float(loss)
    state.t += 1
    return state


def expected_skip(state: AnnealState) -> float:
    """
    Sum of the layer probabilities. When it falls to `delta` or below the state
    freezes: every later probability is 0.

    Examples:
        >>> state = AnnealState(k=1.0, num_layers=2, v=1.0, delta=0.0)
        >>> round(expected_skip(state), 5)
        1.02559
    """
    if state.frozen:
        return 0.0
    total = math.fsum(layer_probabilities(state))
    if state.v is not None and total <= state.delta:
        state.frozen = True
        logger.info(
            "annealing frozen at update %d; expected skip %.6f <= delta %.6f",
            state.t,
            total,
            state.delta,
        )
    return total
