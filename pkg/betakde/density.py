"""Parzen and bias-reduced kernel density estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from .errors import InvalidParameterError
from .kernels import Kernel, gaussian_kernel
from .quadrature import DEFAULT_INTERVALS, QuadratureSpec

# Evaluation points handled per block; each block only touches the
# observations within support_radius * h of it.
BLOCK_ROWS = 256
INTEGRATION_RADIUS = 8.0
IQR_TO_SIGMA = 1.34


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted univariate observations with cached summary statistics."""

    values: np.ndarray
    n: int
    stddev: float
    iqr: float

    def __post_init__(self) -> None:
        if self.n < 2 or self.values.shape != (self.n,):
            raise InvalidParameterError(f"A sample needs at least 2 observations, got {self.values.size}.")
        if np.any(np.diff(self.values) < 0):
            raise InvalidParameterError("Sample values must be sorted ascending.")

    @classmethod
    def from_values(cls, values: Sequence[float] | np.ndarray) -> Sample:
        array = np.sort(np.array(values, dtype=float).ravel())
        if array.size < 2:
            raise InvalidParameterError(f"A sample needs at least 2 observations, got {array.size}.")
        if not np.all(np.isfinite(array)):
            raise InvalidParameterError("Sample values must be finite.")
        array.setflags(write=False)
        q75, q25 = np.percentile(array, [75, 25])
        return cls(
            values=array,
            n=int(array.size),
            stddev=float(np.std(array, ddof=1)),
            iqr=float(q75 - q25),
        )

    @property
    def robust_scale(self) -> float:
        """min(s, IQR/1.34), the rule-of-thumb scale estimate."""
        return min(self.stddev, self.iqr / IQR_TO_SIGMA)

    @property
    def lo(self) -> float:
        return float(self.values[0])

    @property
    def hi(self) -> float:
        return float(self.values[-1])


class EstimateMode(str, Enum):
    PLAIN = "plain"
    BIAS_REDUCED = "bias-reduced"


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """A kernel estimator bound to a sample at a fixed bandwidth."""

    sample: Sample
    bandwidth: float
    kernel: Kernel = field(default_factory=gaussian_kernel)
    mode: EstimateMode = EstimateMode.BIAS_REDUCED

    def __post_init__(self) -> None:
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise InvalidParameterError(f"Bandwidth must be positive, got {self.bandwidth}.")
        object.__setattr__(self, "mode", EstimateMode(self.mode))

    def with_bandwidth(self, bandwidth: float) -> DensityEstimate:
        return replace(self, bandwidth=bandwidth)

    def with_mode(self, mode: EstimateMode | str) -> DensityEstimate:
        return replace(self, mode=EstimateMode(mode))

    def __call__(self, x):
        if self.mode is EstimateMode.PLAIN:
            return parzen_at(self, x)
        return bias_reduced_at(self, x)


@dataclass(frozen=True)
class EvaluationGrid:
    """count equally spaced points from lo to hi inclusive."""

    lo: float
    hi: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 2:
            raise InvalidParameterError(f"A grid needs at least 2 points, got {self.count}.")
        if not self.lo < self.hi:
            raise InvalidParameterError(f"A grid needs lo < hi, got [{self.lo}, {self.hi}].")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


def _kernel_sum(
    x, data: np.ndarray, h: float, func: Callable[[np.ndarray], np.ndarray], radius: float
) -> np.ndarray | float:
    """Sum func((x - X_j)/h) over observations, per evaluation point."""
    scalar = np.ndim(x) == 0
    points = np.atleast_1d(np.asarray(x, dtype=float))
    flat = points.ravel()
    out = np.empty(flat.shape, dtype=float)
    reach = radius * h

    for start in range(0, flat.size, BLOCK_ROWS):
        block = flat[start:start + BLOCK_ROWS]
        if math.isfinite(reach):
            lo = np.searchsorted(data, block.min() - reach, side="left")
            hi = np.searchsorted(data, block.max() + reach, side="right")
            window = data[lo:hi]
        else:
            window = data
        if window.size == 0:
            out[start:start + block.size] = 0.0
            continue
        u = (block[:, None] - window[None, :]) / h
        weights = func(u)
        if math.isfinite(reach):
            weights = np.where(np.abs(u) <= radius, weights, 0.0)
        out[start:start + block.size] = weights.sum(axis=1)

    if scalar:
        return float(out[0])
    return out.reshape(points.shape)


def parzen_at(est: DensityEstimate, x):
    """(1/(n h)) sum_i K((x - X_i)/h)."""
    kernel, h = est.kernel, est.bandwidth
    total = _kernel_sum(x, est.sample.values, h, kernel.evaluate, kernel.support_radius)
    return total / (est.sample.n * h)


def second_derivative_at(est: DensityEstimate, x):
    """(1/(n h^3)) sum_i K''((x - X_i)/h)."""
    kernel, h = est.kernel, est.bandwidth
    total = _kernel_sum(x, est.sample.values, h, kernel.second_derivative, kernel.support_radius)
    return total / (est.sample.n * h**3)


def bias_reduced_at(est: DensityEstimate, x):
    """f_n(x) - (h^2/2) f_n''(x) mu2. Values may be negative.

    Computed in one pass as a Parzen sum with the effective kernel K - (mu2/2) K''.
    """
    kernel, h = est.kernel, est.bandwidth
    total = _kernel_sum(x, est.sample.values, h, kernel.effective, kernel.support_radius)
    return total / (est.sample.n * h)


def leave_one_out_at_samples(est: DensityEstimate) -> np.ndarray:
    """Estimate at each X_i built from the other n-1 observations.

    Plain mode gives (1/(h(n-1))) sum_{j != i} K((X_i - X_j)/h); bias-reduced
    mode uses the effective kernel K - (mu2/2) K'' in place of K.
    """
    kernel, h, sample = est.kernel, est.bandwidth, est.sample
    if est.mode is EstimateMode.PLAIN:
        func = kernel.evaluate
    else:
        func = kernel.effective
    totals = _kernel_sum(sample.values, sample.values, h, func, kernel.support_radius)
    self_term = float(func(np.zeros(1))[0])
    return (totals - self_term) / (h * (sample.n - 1))


def evaluate_grid(est: DensityEstimate, grid: EvaluationGrid) -> pd.DataFrame:
    """Evaluate the estimate in its mode on every grid point, in grid order."""
    x = grid.points()
    return pd.DataFrame({"x": x, "density": est(x)})


def clipped_positive(values, floor: float = 0.0) -> np.ndarray:
    """Elementwise max(value, floor)."""
    if floor < 0:
        raise InvalidParameterError(f"Clip floor must be non-negative, got {floor}.")
    return np.maximum(np.asarray(values, dtype=float), floor)


def integration_spec(est: DensityEstimate, intervals: int = DEFAULT_INTERVALS) -> QuadratureSpec:
    """[min(X) - 8h, max(X) + 8h], the range carrying all of the estimate's mass."""
    reach = INTEGRATION_RADIUS * est.bandwidth
    return QuadratureSpec(est.sample.lo - reach, est.sample.hi + reach, intervals)
