"""
Numerical check of the weak-gradient identity in one dimension:

    integral g(x) K(x) dx = - integral L(x) K'(x) dx

for a Gaussian test kernel K, by trapezoidal quadrature on a uniform grid.
"""

import math
from typing import Callable, Tuple

import numpy as np

from mollify.exceptions.oracle import QuadratureGridError

__all__ = ["gaussian_kernel", "trapezoid", "verify_weak_gradient"]

# Kernel mass allowed outside the grid.
_MAX_OUTSIDE_MASS = 1e-6


def gaussian_kernel(
    grid: np.ndarray, std: float, center: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Return (K, K') of the N(center, std^2) density on `grid`.
    """
    z = (grid - center) / std
    density = np.exp(-0.5 * z**2) / (std * math.sqrt(2.0 * math.pi))
    return density, -z / std * density


def trapezoid(values: np.ndarray, grid: np.ndarray) -> float:
    """
    Trapezoidal rule on an increasing grid.

    Examples:
        >>> trapezoid(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 2.0]))
        2.0
    """
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(grid)))


def _check_grid(grid: np.ndarray, std: float, center: float) -> None:
    if grid.ndim != 1 or grid.size < 3:
        raise QuadratureGridError(
            "cannot integrate; grid must be 1-D with at least 3 points. "
        )
    steps = np.diff(grid)
    if not (steps > 0).all() or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise QuadratureGridError("cannot integrate; grid must be uniform. ")
    if not std > 0:
        raise QuadratureGridError(
            f"cannot integrate; kernel std must be positive, got {std}. "
        )
    scale = std * math.sqrt(2.0)
    outside = 0.5 * math.erfc((center - grid[0]) / scale) + 0.5 * math.erfc(
        (grid[-1] - center) / scale
    )
    if outside > _MAX_OUTSIDE_MASS:
        raise QuadratureGridError(
            f"cannot integrate; grid [{grid[0]}, {grid[-1]}] leaves kernel mass "
            f"{outside:.3g} outside, more than {_MAX_OUTSIDE_MASS:g}. "
        )


def verify_weak_gradient(
    L_fn: Callable[[np.ndarray], np.ndarray],
    g_fn: Callable[[np.ndarray], np.ndarray],
    kernel_std: float,
    grid: np.ndarray,
    center: float = 0.0,
) -> float:
    """
    Residual |integral g K + integral L K'| of the weak-gradient identity against a
    Gaussian kernel of std `kernel_std` centred at `center`. `L_fn` and `g_fn` are
    evaluated on the whole grid at once.

    Raises `QuadratureGridError` if the grid is not uniform or leaves more than 1e-6
    of the kernel mass outside.

    Examples:
        >>> grid = np.linspace(-10.0, 10.0, 2001)
        >>> verify_weak_gradient(lambda x: x**2 / 2, lambda x: x, 1.0, grid) < 1e-9
        True
    """
    grid = np.asarray(grid, dtype=np.float64)
    _check_grid(grid, kernel_std, center)
    kernel, kernel_slope = gaussian_kernel(grid, kernel_std, center)
    lhs = trapezoid(np.asarray(g_fn(grid), dtype=np.float64) * kernel, grid)
    rhs = -trapezoid(np.asarray(L_fn(grid), dtype=np.float64) * kernel_slope, grid)
    return abs(lhs - rhs)
