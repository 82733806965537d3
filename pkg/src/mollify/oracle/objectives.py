"""
This module defines:
The objective handle, a scalar objective of a parameter vector
Functions to fetch and register built-in objectives
The built-in objectives: quadratic, absval, double-well and rosenbrock

Evaluators either map one parameter vector to a float, or, when marked vectorized,
map a (samples, dimension) array of parameter vectors to one value per row.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

try:
    from typing import TypeAlias  # Python >= 3.10 pylint: disable=ungrouped-imports
except ImportError:
    from typing_extensions import TypeAlias  # Python < 3.10

from mollify.constants import FINITE_DIFF_STEP
from mollify.numerics.gradcheck import finite_diff_grad
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.numerics import ShapeMismatchError
from mollify.exceptions.oracle import UnknownObjectiveError

__all__ = [
    "ObjectiveHandle",
    "register_objective",
    "get_objective",
    "objective_names",
]


@dataclass(frozen=True)
class ObjectiveHandle:
    """
    A deterministic scalar objective of `dimension` parameters with an optional
    analytic gradient.

    Examples:
        >>> obj = get_objective("quadratic", 2)
        >>> obj.value(np.array([1.0, 2.0]))
        5.0
        >>> obj.gradients(np.array([[1.0, 2.0]])).tolist()
        [[2.0, 4.0]]
    """

    dimension: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    vectorized: bool = False
    name: str = "objective"

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise MollifyValidationError(
                "cannot create ObjectiveHandle; dimension must be positive, got "
                f"{self.dimension}. "
            )

    def _rows(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=np.float64)
        if thetas.ndim == 1:
            thetas = thetas.reshape(1, -1)
        if thetas.ndim != 2 or thetas.shape[1] != self.dimension:
            raise ShapeMismatchError(
                f"cannot evaluate {self.name}; parameter shape {thetas.shape} does "
                f"not match dimension {self.dimension}. ",
                tuple(thetas.shape),
                (self.dimension,),
            )
        return thetas

    def values(self, thetas: np.ndarray) -> np.ndarray:
        """
        One objective value per row of `thetas`.
        """
        thetas = self._rows(thetas)
        if self.vectorized:
            return np.asarray(self.evaluator(thetas), dtype=np.float64).reshape(-1)
        return np.array([float(self.evaluator(theta)) for theta in thetas])

    def value(self, theta: np.ndarray) -> float:
        return float(self.values(theta)[0])

    def gradients(
        self, thetas: np.ndarray, h: float = FINITE_DIFF_STEP
    ) -> np.ndarray:
        """
        One gradient per row of `thetas`: the analytic gradient when the handle has
        one, central differences with step `h` otherwise.
        """
        thetas = self._rows(thetas)
        if self.gradient is None:
            return np.array(
                [finite_diff_grad(self.value, theta, h) for theta in thetas]
            )
        if self.vectorized:
            return np.asarray(self.gradient(thetas), dtype=np.float64).reshape(
                thetas.shape
            )
        return np.array([self.gradient(theta) for theta in thetas], dtype=np.float64)


ObjectiveFactory: TypeAlias = Callable[[int], ObjectiveHandle]

_objectives: Dict[str, ObjectiveFactory] = {}


def register_objective(name: str) -> Callable:
    """
    Decorate a factory of objective handles (taking the dimension) to register it as
    a built-in objective.

    Raises `MollifyValueError` if `name` has already got an objective.
    """
    if name in _objectives:
        raise MollifyValueError(
            f"cannot register objective twice; {name} has already got an objective. "
        )

    def wrapper(factory: ObjectiveFactory) -> ObjectiveFactory:
        _objectives[name] = factory
        return factory

    return wrapper


def get_objective(name: str, dimension: int = 1) -> ObjectiveHandle:
    """
    Create the built-in objective `name` in `dimension` parameters.

    Raises `UnknownObjectiveError` if no objective is registered under `name`.
    """
    try:
        factory = _objectives[name]
    except KeyError:
        raise UnknownObjectiveError(
            f"cannot get objective {name!r}; available objectives: "
            f"{', '.join(objective_names())}. "
        ) from None
    return factory(dimension)


def objective_names() -> List[str]:
    return sorted(_objectives)


@register_objective("quadratic")
def quadratic(dimension: int) -> ObjectiveHandle:
    """
    sum(theta^2).
    """
    return ObjectiveHandle(
        dimension,
        lambda thetas: np.sum(thetas**2, axis=1),
        lambda thetas: 2.0 * thetas,
        vectorized=True,
        name="quadratic",
    )


@register_objective("absval")
def absval(dimension: int) -> ObjectiveHandle:
    """
    sum(|theta|), with sign(theta) as its weak gradient.
    """
    return ObjectiveHandle(
        dimension,
        lambda thetas: np.sum(np.abs(thetas), axis=1),
        np.sign,
        vectorized=True,
        name="absval",
    )


@register_objective("double-well")
def double_well(dimension: int) -> ObjectiveHandle:
    """
    sum((theta^2 - 1)^2), with minima at theta = +-1.
    """
    return ObjectiveHandle(
        dimension,
        lambda thetas: np.sum((thetas**2 - 1.0) ** 2, axis=1),
        lambda thetas: 4.0 * thetas * (thetas**2 - 1.0),
        vectorized=True,
        name="double-well",
    )


def _rosenbrock(thetas: np.ndarray) -> np.ndarray:
    head, tail = thetas[:, :-1], thetas[:, 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=1)


def _rosenbrock_gradient(thetas: np.ndarray) -> np.ndarray:
    head, tail = thetas[:, :-1], thetas[:, 1:]
    coupling = tail - head**2
    grad = np.zeros_like(thetas)
    grad[:, :-1] = -400.0 * head * coupling - 2.0 * (1.0 - head)
    grad[:, 1:] += 200.0 * coupling
    return grad


@register_objective("rosenbrock")
def rosenbrock(dimension: int) -> ObjectiveHandle:
    """
    sum(100 (theta_{i+1} - theta_i^2)^2 + (1 - theta_i)^2), minimum at all ones.

    Raises `MollifyValueError` if dimension < 2.
    """
    if dimension < 2:
        raise MollifyValueError(
            f"cannot create rosenbrock; dimension must be at least 2, got {dimension}. "
        )
    return ObjectiveHandle(
        dimension,
        _rosenbrock,
        _rosenbrock_gradient,
        vectorized=True,
        name="rosenbrock",
    )
