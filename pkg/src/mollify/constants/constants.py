from math import pi, sqrt

__all__ = [
    "HALF_NORMAL_MEAN",
    "RMSPROP_EPSILON",
    "FINITE_DIFF_STEP",
]

# E|xi| for xi ~ N(0, 1).
HALF_NORMAL_MEAN = sqrt(2 / pi)
RMSPROP_EPSILON = 1e-8
FINITE_DIFF_STEP = 1e-5
