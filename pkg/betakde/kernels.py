"""Symmetric probability kernels with their analytic constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

ArrayFunction = Callable[[np.ndarray], np.ndarray]

# Beyond |u| = 8 the Gaussian density is below 1e-14 and is treated as zero.
GAUSSIAN_SUPPORT_RADIUS = 8.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Kernel:
    """A kernel K together with K'' and the moments used by bandwidth formulas.

    ``mu2`` and ``mu4`` are the second and fourth moments, ``roughness`` is
    R(K) = int K(t)^2 dt. ``bias_reduced_roughness`` is R(L) for the effective
    kernel L = K - (mu2/2) K'' of the bias-reduced estimator.
    """

    name: str
    evaluate: ArrayFunction
    second_derivative: ArrayFunction
    mu2: float
    mu4: float
    roughness: float
    support_radius: float
    bias_reduced_roughness: float

    def effective(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the bias-reduced effective kernel K(u) - (mu2/2) K''(u)."""
        u = np.asarray(u, dtype=float)
        return self.evaluate(u) - 0.5 * self.mu2 * self.second_derivative(u)


def _gaussian(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.exp(-0.5 * u * u) / _SQRT_2PI


def _gaussian_second_derivative(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return (u * u - 1.0) * _gaussian(u)


def gaussian_kernel() -> Kernel:
    """Return the standard normal density kernel."""
    return Kernel(
        name="gaussian",
        evaluate=_gaussian,
        second_derivative=_gaussian_second_derivative,
        mu2=1.0,
        mu4=3.0,
        roughness=1.0 / math.sqrt(4.0 * math.pi),
        support_radius=GAUSSIAN_SUPPORT_RADIUS,
        # R(phi) + R(phi') + R(phi'')/4
        bias_reduced_roughness=27.0 / (32.0 * math.sqrt(math.pi)),
    )
