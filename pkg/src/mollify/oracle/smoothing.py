"""
This module estimates the Gaussian mollification of an objective by Monte Carlo:

    L_K(theta)      ~ (1/N) sum L(theta - xi_i)
    grad L_K(theta) ~ (1/N) sum grad L(theta - xi_i)

with xi_i ~ N(0, sigma^2 I). Every estimate comes with its standard error.

Evaluating two estimates with streams built from the same seed couples them through
common random numbers: both see the same shifts xi_i.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from mollify.numerics.rng import RngStream
from mollify.oracle.objectives import ObjectiveHandle
from mollify.exceptions.oracle import NonFiniteSampleError, SmoothingSpecError

__all__ = [
    "SmoothingSpec",
    "MonteCarloEstimate",
    "mc_mollify",
    "mc_mollified_grad",
]


@dataclass
class SmoothingSpec:
    """
    Kernel scale `sigma`, sample count `samples` and the stream shifts are drawn
    from. sigma = 0 means no smoothing.
    """

    sigma: float
    samples: int
    rng: RngStream

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise SmoothingSpecError(
                "cannot create SmoothingSpec; sigma must be finite and non-negative, "
                f"got {self.sigma}. "
            )
        if self.samples < 1:
            raise SmoothingSpecError(
                "cannot create SmoothingSpec; sample count must be at least 1, got "
                f"{self.samples}. "
            )


@dataclass(frozen=True)
class MonteCarloEstimate:
    """
    Sample mean and its standard error; arrays for gradient estimates. The standard
    error of a single sample is NaN.
    """

    value: Union[float, np.ndarray]
    std_error: Union[float, np.ndarray]


def _theta(obj: ObjectiveHandle, theta) -> np.ndarray:
    return np.atleast_1d(np.asarray(theta, dtype=np.float64)).reshape(-1)


def _shifted(obj: ObjectiveHandle, theta: np.ndarray, spec: SmoothingSpec):
    shifts = spec.rng.normal(0.0, spec.sigma, (spec.samples, obj.dimension))
    return theta - shifts


def _check_samples(samples: np.ndarray, name: str) -> None:
    finite = np.isfinite(samples.reshape(samples.shape[0], -1)).all(axis=1)
    if not finite.all():
        index = int(np.argmin(finite))
        raise NonFiniteSampleError(
            f"cannot estimate mollified {name}; objective is not finite at sample "
            f"{index}. ",
            index,
        )


def _std_error(samples: np.ndarray):
    if samples.shape[0] < 2:
        return np.full(samples.shape[1:], np.nan) if samples.ndim > 1 else math.nan
    return samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])


def mc_mollify(
    obj: ObjectiveHandle, theta, spec: SmoothingSpec
) -> MonteCarloEstimate:
    """
    Monte-Carlo estimate of the mollified objective at `theta`.

    Raises `NonFiniteSampleError` with the index of the first sample whose objective
    value is not finite.

    Examples:
        >>> from mollify.oracle.objectives import get_objective
        >>> spec = SmoothingSpec(0.0, 10, RngStream(0))
        >>> mc_mollify(get_objective("absval"), 2.0, spec)
        MonteCarloEstimate(value=2.0, std_error=0.0)
    """
    theta = _theta(obj, theta)
    if spec.sigma == 0:
        samples = obj.values(theta)
        _check_samples(samples, "value")
        return MonteCarloEstimate(float(samples[0]), 0.0)
    samples = obj.values(_shifted(obj, theta, spec))
    _check_samples(samples, "value")
    return MonteCarloEstimate(float(samples.mean()), float(_std_error(samples)))


def mc_mollified_grad(
    obj: ObjectiveHandle, theta, spec: SmoothingSpec
) -> MonteCarloEstimate:
    """
    Monte-Carlo estimate of the gradient of the mollified objective at `theta`:
    the mean of the per-sample gradients at the shifted points. Objectives without an
    analytic gradient are differentiated per sample by central differences.

    Raises `NonFiniteSampleError` with the index of the first sample whose gradient is
    not finite.
    """
    theta = _theta(obj, theta)
    if spec.sigma == 0:
        samples = obj.gradients(theta)
        _check_samples(samples, "gradient")
        return MonteCarloEstimate(samples[0], np.zeros(obj.dimension))
    samples = obj.gradients(_shifted(obj, theta, spec))
    _check_samples(samples, "gradient")
    return MonteCarloEstimate(samples.mean(axis=0), _std_error(samples))
