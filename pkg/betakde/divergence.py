"""Beta-divergence, integrated squared error and the asymptotic expected divergence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .density import clipped_positive
from .errors import InvalidParameterError, UnboundedBandwidthError
from .kernels import Kernel
from .quadrature import (
    CLIP_FLOOR,
    ORACLE_HALF_WIDTH,
    ORACLE_INTERVALS,
    Functionals,
    QuadratureSpec,
    integrate_values,
)

Curve = Callable[[np.ndarray], np.ndarray]
Sampler = Callable[[int, np.random.Generator], np.ndarray]

# d/dh of the AED vanishes at h^9 = 72 R(K) I1 / (mu4^2 I2 n).
OPTIMAL_BANDWIDTH_COEFFICIENT = 72.0


@dataclass(frozen=True)
class BetaParam:
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 1):
            raise InvalidParameterError(f"beta must exceed 1, got {self.beta}.")

    @classmethod
    def coerce(cls, value: BetaParam | float) -> BetaParam:
        return value if isinstance(value, cls) else cls(float(value))

    def __float__(self) -> float:
        return self.beta


@dataclass(frozen=True)
class TargetDensity:
    """A known density with its exact fourth derivative.

    ``mean`` and ``sd`` are the moments of the whole density; ``sampler`` draws
    i.i.d. observations and is needed only for Monte Carlo searches.
    """

    pdf: Curve
    fourth_derivative: Curve
    support_hint: tuple[float, float]
    mean: float = 0.0
    sd: float = 1.0
    sampler: Sampler | None = None

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is None:
            raise InvalidParameterError("This target density has no sampler.")
        return self.sampler(n, rng)

    def quadrature_spec(self, intervals: int = 2048) -> QuadratureSpec:
        return QuadratureSpec(self.support_hint[0], self.support_hint[1], intervals)


def normal_target(mean: float = 0.0, sd: float = 1.0) -> TargetDensity:
    """N(mean, sd^2) as a TargetDensity."""
    if not sd > 0:
        raise InvalidParameterError(f"Standard deviation must be positive, got {sd}.")

    def fourth_derivative(x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - mean) / sd
        return norm.pdf(z) / sd**5 * (3.0 - 6.0 * z**2 + z**4)

    return TargetDensity(
        pdf=lambda x: norm.pdf(x, loc=mean, scale=sd),
        fourth_derivative=fourth_derivative,
        support_hint=(mean - 8.0 * sd, mean + 8.0 * sd),
        mean=mean,
        sd=sd,
        sampler=lambda n, rng: rng.normal(mean, sd, size=n),
    )


def beta_divergence(g: Curve, f: TargetDensity, beta: BetaParam | float, spec: QuadratureSpec) -> float:
    """(1/b) int g^b - (1/(b-1)) int g^(b-1) f + (1/(b(b-1))) int f^b, g clipped at 0."""
    b = BetaParam.coerce(beta).beta
    x = spec.nodes()
    gv = clipped_positive(g(x))
    fv = np.asarray(f.pdf(x), dtype=float)
    integrand = gv**b / b - gv ** (b - 1.0) * fv / (b - 1.0) + fv**b / (b * (b - 1.0))
    return integrate_values(integrand, spec)


def ise(g: Curve, f: TargetDensity, spec: QuadratureSpec) -> float:
    """int (g - f)^2."""
    x = spec.nodes()
    diff = np.asarray(g(x), dtype=float) - np.asarray(f.pdf(x), dtype=float)
    return integrate_values(diff * diff, spec)


def asymptotic_expected_divergence(h: float, n: int, kernel: Kernel, i1: float, i2: float) -> float:
    """(1/2) [ h^8/576 mu4^2 I2 + R(K) I1 / (n h) ]."""
    if not h > 0:
        raise InvalidParameterError(f"Bandwidth must be positive, got {h}.")
    return 0.5 * (h**8 / 576.0 * kernel.mu4**2 * i2 + kernel.roughness * i1 / (n * h))


def optimal_bandwidth(i1: float, i2: float, n: int, kernel: Kernel) -> float:
    """Closed-form minimiser of the asymptotic expected divergence."""
    if not i2 > 0:
        raise UnboundedBandwidthError(
            f"int f^(beta-2) (f'''')^2 = {i2}; the optimal bandwidth is unbounded."
        )
    if n < 1:
        raise InvalidParameterError(f"Sample size must be positive, got {n}.")
    ratio = OPTIMAL_BANDWIDTH_COEFFICIENT * kernel.roughness * i1 / (kernel.mu4**2 * i2)
    return (ratio / n) ** (1.0 / 9.0)


def target_functionals(
    target: TargetDensity, beta: BetaParam | float, intervals: int = ORACLE_INTERVALS
) -> Functionals:
    """int f^(beta-1) and int f^(beta-2) (f'''')^2 for any target, by quadrature."""
    b = BetaParam.coerce(beta).beta
    lo, hi = target.support_hint
    reach = ORACLE_HALF_WIDTH * target.sd / math.sqrt(min(b - 1.0, 1.0))
    spec = QuadratureSpec(min(lo, target.mean - reach), max(hi, target.mean + reach), intervals)
    x = spec.nodes()
    density = np.maximum(np.asarray(target.pdf(x), dtype=float), CLIP_FLOOR)
    fourth = np.asarray(target.fourth_derivative(x), dtype=float)
    # f^(b-2) f''''^2 written as f^b (f''''/f)^2 so no negative power meets a tiny f.
    ratio = fourth / density
    i1 = integrate_values(density ** (b - 1.0), spec)
    i2 = integrate_values(density**b * ratio * ratio, spec)
    return Functionals(i1, i2)
