"""Bandwidth selectors: theoretical, normal reference, cross-validation and Monte Carlo MISE."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .density import (
    DensityEstimate,
    EstimateMode,
    Sample,
    clipped_positive,
    integration_spec,
    leave_one_out_at_samples,
)
from .divergence import BetaParam, TargetDensity, ise, optimal_bandwidth, target_functionals
from .errors import DegenerateObjectiveError, DegenerateScaleError, InvalidParameterError
from .kernels import Kernel, gaussian_kernel
from .optimize import golden_section_minimize, log_grid, parabolic_vertex
from .quadrature import DEFAULT_INTERVALS, QuadratureSpec, gaussian_functional_oracle, integrate_values

logger = logging.getLogger(__name__)

DEFAULT_GRID_COUNT = 48
DEFAULT_MISE_REPS = 200
MIN_GRID_COUNT = 16
TARGET_GRID_COUNT = 64
# Leave-one-out weight numerators: 1 makes beta = 2 exactly half of least-squares CV,
# 2 is the weight of the published display.
LOO_WEIGHT = 1.0
PUBLISHED_LOO_WEIGHT = 2.0
# Seed-sequence stream tags: trials draw from stream 0, the h_MISE search from stream 1.
TRIAL_STREAM = 0
MISE_STREAM = 1


class SelectorMethod(str, Enum):
    NORMAL_REFERENCE = "nr"
    CROSS_VALIDATION = "cv"
    THEORETICAL = "theoretical"
    MISE_SEARCH = "mise"


@dataclass(frozen=True)
class BandwidthSearch:
    """Log-spaced coarse grid on [h_lo, h_hi] followed by a local refinement."""

    h_lo: float
    h_hi: float
    grid_count: int = DEFAULT_GRID_COUNT
    refine_tol: float = 1e-4

    def __post_init__(self) -> None:
        if not 0 < self.h_lo < self.h_hi:
            raise InvalidParameterError(f"Search bounds need 0 < h_lo < h_hi, got [{self.h_lo}, {self.h_hi}].")
        if self.grid_count < MIN_GRID_COUNT:
            raise InvalidParameterError(f"Search grid needs at least {MIN_GRID_COUNT} points, got {self.grid_count}.")
        if not 0 < self.refine_tol < self.h_lo:
            raise InvalidParameterError(f"refine_tol must lie in (0, h_lo), got {self.refine_tol}.")

    @classmethod
    def default_for(cls, scale: float, n: int) -> BandwidthSearch:
        """[scale/(10 n^(1/5)), 3 scale], 48 points, tolerance 1e-4 scale."""
        if not scale > 0:
            raise DegenerateScaleError(f"Scale estimate is {scale}; the sample is degenerate.")
        return cls(
            h_lo=scale / (10.0 * n**0.2),
            h_hi=3.0 * scale,
            grid_count=DEFAULT_GRID_COUNT,
            refine_tol=1e-4 * scale,
        )

    @classmethod
    def for_target(cls, target: TargetDensity, n: int) -> BandwidthSearch:
        """Deeper search for a known target: [sd/(100 n^(1/5)), 3 sd] on 64 points.

        A mixture with a narrow component needs bandwidths far below its overall sd.
        """
        return cls(
            h_lo=target.sd / (100.0 * n**0.2),
            h_hi=3.0 * target.sd,
            grid_count=TARGET_GRID_COUNT,
            refine_tol=1e-4 * target.sd / n**0.2,
        )

    @property
    def bounds(self) -> tuple[float, float]:
        return (self.h_lo, self.h_hi)

    def grid(self) -> np.ndarray:
        return log_grid(self.h_lo, self.h_hi, self.grid_count)


@dataclass(frozen=True)
class SelectorSpec:
    """A selection method plus its parameters.

    ``target`` is required by the theoretical and MISE methods. ``search`` of
    None means the data-driven default bounds.
    """

    method: SelectorMethod
    beta: float = 2.0
    target: TargetDensity | None = None
    mc_reps: int = DEFAULT_MISE_REPS
    search: BandwidthSearch | None = None
    loo_bias_reduced: bool = False
    loo_weight: float = LOO_WEIGHT

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", SelectorMethod(self.method))
        BetaParam.coerce(self.beta)
        if not self.loo_weight > 0:
            raise InvalidParameterError(f"loo_weight must be positive, got {self.loo_weight}.")
        if self.mc_reps < 1:
            raise InvalidParameterError(f"mc_reps must be at least 1, got {self.mc_reps}.")
        needs_target = self.method in (SelectorMethod.THEORETICAL, SelectorMethod.MISE_SEARCH)
        if needs_target and self.target is None:
            raise InvalidParameterError(f"Selector {self.method.value} needs a target density.")

    @property
    def name(self) -> str:
        if self.method is SelectorMethod.NORMAL_REFERENCE:
            return f"NR({self.beta:g})"
        if self.method is SelectorMethod.CROSS_VALIDATION:
            suffix = ",br" if self.loo_bias_reduced else ""
            if self.loo_weight != LOO_WEIGHT:
                suffix += f",w{self.loo_weight:g}"
            return f"CV({self.beta:g}{suffix})"
        if self.method is SelectorMethod.THEORETICAL:
            return f"TH({self.beta:g})"
        return "MISE"


@dataclass(frozen=True)
class BandwidthSelection:
    """A selected bandwidth with the metadata reported next to it."""

    bandwidth: float
    selector: str
    beta: float | None = None
    boundary_hit: bool = False
    search_bounds: tuple[float, float] | None = None
    sigma_hat: float | None = None
    objective: np.ndarray | None = field(default=None, repr=False)


def stream_rng(seed_key: int | Sequence[int], rep: int, stream: int) -> np.random.Generator:
    """Generator for one (seed lineage, replication, stream) triple."""
    key = [seed_key] if isinstance(seed_key, (int, np.integer)) else list(seed_key)
    return np.random.default_rng(np.random.SeedSequence([*map(int, key), rep, stream]))


def theoretical_bandwidth(
    target: TargetDensity, beta: BetaParam | float, kernel: Kernel | None = None, n: int = 100
) -> float:
    """The beta-divergence optimal bandwidth for a known target."""
    kernel = kernel or gaussian_kernel()
    i1, i2 = target_functionals(target, beta)
    return optimal_bandwidth(i1, i2, n, kernel)


def published_nr_general(sigma: float, n: int, beta: float) -> float:
    """The published general Gaussian-kernel rule, as displayed (27-beta polynomial)."""
    poly = 9 * beta**4 - 36 * beta**3 + 90 * beta**2 + 27 * beta + 105
    return (math.sqrt(2.0 / math.pi) * 4.0 * beta**4 / poly / n) ** (1.0 / 9.0) * sigma


def published_nr_beta2(sigma: float, n: int) -> float:
    """The published beta = 2 rule, as displayed."""
    return (math.sqrt(16.0 / 861.0 * 2.0 / math.pi) / n) ** (1.0 / 9.0) * sigma


def normal_reference(sample: Sample, beta: BetaParam | float = 2.0, kernel: Kernel | None = None) -> float:
    """Optimal bandwidth evaluated at N(., sigma_hat^2), sigma_hat = min(s, IQR/1.34)."""
    kernel = kernel or gaussian_kernel()
    b = BetaParam.coerce(beta).beta
    sigma_hat = sample.robust_scale
    if not sigma_hat > 0:
        raise DegenerateScaleError(
            f"sigma_hat = min(s, IQR/1.34) = {sigma_hat}; normal reference needs a non-constant sample."
        )
    i1, i2 = gaussian_functional_oracle(0.0, sigma_hat, b)
    h = optimal_bandwidth(i1, i2, sample.n, kernel)
    if logger.isEnabledFor(logging.DEBUG):
        display = published_nr_beta2(sigma_hat, sample.n) if b == 2 else published_nr_general(sigma_hat, sample.n, b)
        logger.debug(
            "normal reference beta=%g sigma_hat=%.6g n=%d: quadrature h=%.6g, published display h=%.6g (ratio %.4f)",
            b, sigma_hat, sample.n, h, display, h / display,
        )
    return h


def cv_objective(
    sample: Sample,
    h: float,
    beta: BetaParam | float = 2.0,
    kernel: Kernel | None = None,
    spec: QuadratureSpec | None = None,
    *,
    loo_bias_reduced: bool = False,
    mode: EstimateMode = EstimateMode.BIAS_REDUCED,
    loo_weight: float = LOO_WEIGHT,
) -> float:
    """(1/b) int f_h^b - (w/(n(b-1))) sum_i g_(i)(X_i)^(b-1), w = ``loo_weight``.

    f_h is the full-sample estimate in ``mode`` and g_(i) the leave-one-out
    Parzen estimate (bias-reduced when ``loo_bias_reduced``). Both are
    clipped at zero before powering. With w = 1 the sum estimates
    (1/(b-1)) E f_h^(b-1)(X), so at b = 2 in plain mode the objective is half
    the least-squares criterion int f_h^2 - (2/n) sum_i g_(i)(X_i).
    """
    kernel = kernel or gaussian_kernel()
    b = BetaParam.coerce(beta).beta
    if sample.n < 3:
        raise InvalidParameterError(f"Cross-validation needs n >= 3, got {sample.n}.")
    est = DensityEstimate(sample, h, kernel, mode)
    spec = spec or integration_spec(est)
    fitted = clipped_positive(est(spec.nodes()))
    if not np.any(fitted > 0):
        raise DegenerateObjectiveError(f"The estimate at h={h} is non-positive everywhere.")
    first = integrate_values(fitted**b, spec) / b

    loo_mode = EstimateMode.BIAS_REDUCED if loo_bias_reduced else EstimateMode.PLAIN
    held_out = clipped_positive(leave_one_out_at_samples(est.with_mode(loo_mode)))
    second = loo_weight / (sample.n * (b - 1.0)) * float(np.sum(held_out ** (b - 1.0)))
    return first - second


def select_cv(
    sample: Sample,
    beta: BetaParam | float = 2.0,
    kernel: Kernel | None = None,
    search: BandwidthSearch | None = None,
    *,
    loo_bias_reduced: bool = False,
    mode: EstimateMode = EstimateMode.BIAS_REDUCED,
    loo_weight: float = LOO_WEIGHT,
) -> BandwidthSelection:
    """Minimise cv_objective: coarse log-grid scan, then golden-section around the best point."""
    kernel = kernel or gaussian_kernel()
    b = BetaParam.coerce(beta).beta
    search = search or BandwidthSearch.default_for(sample.robust_scale, sample.n)

    def objective(h: float) -> float:
        return cv_objective(
            sample, h, b, kernel, loo_bias_reduced=loo_bias_reduced, mode=mode, loo_weight=loo_weight
        )

    grid = search.grid()
    scores = np.array([objective(h) for h in grid])
    best = int(np.argmin(scores))  # first minimum, so ties go to the smallest h
    name = SelectorSpec(
        SelectorMethod.CROSS_VALIDATION, b, loo_bias_reduced=loo_bias_reduced, loo_weight=loo_weight
    ).name

    if best in (0, grid.size - 1):
        logger.warning(
            "%s minimum on the search boundary h=%.6g of [%.6g, %.6g]",
            name, grid[best], search.h_lo, search.h_hi,
        )
        return BandwidthSelection(
            float(grid[best]), name, b, True, search.bounds, sample.robust_scale, scores
        )

    refined = golden_section_minimize(objective, grid[best - 1], grid[best + 1], search.refine_tol)
    h = refined if objective(refined) <= scores[best] else float(grid[best])
    return BandwidthSelection(h, name, b, False, search.bounds, sample.robust_scale, scores)


def _rep_ise_curve(
    target: TargetDensity,
    n: int,
    kernel: Kernel,
    grid: np.ndarray,
    seed_key: int | Sequence[int],
    rep: int,
    mode: EstimateMode,
) -> np.ndarray:
    """ISE across the bandwidth grid for one replication's sample."""
    rng = stream_rng(seed_key, rep, MISE_STREAM)
    sample = Sample.from_values(target.draw(n, rng))
    curve = np.empty(grid.size)
    for index, h in enumerate(grid):
        est = DensityEstimate(sample, float(h), kernel, mode)
        spec = trial_ise_spec(target, est)
        curve[index] = ise(est, target, spec)
    return curve


def trial_ise_spec(target: TargetDensity, est: DensityEstimate) -> QuadratureSpec:
    """Union of the target's support hint and the estimate's own range."""
    lo, hi = target.support_hint
    return QuadratureSpec(lo, hi, DEFAULT_INTERVALS).union(integration_spec(est))


@dataclass(frozen=True)
class MiseResult:
    """Monte Carlo MISE curve over the search grid and its refined minimiser."""

    bandwidth: float
    grid: np.ndarray = field(repr=False)
    mise: np.ndarray = field(repr=False)
    boundary_hit: bool = False


def mise_search(
    target: TargetDensity,
    n: int,
    kernel: Kernel | None = None,
    mc_reps: int = DEFAULT_MISE_REPS,
    seed: int | Sequence[int] = 0,
    search: BandwidthSearch | None = None,
    *,
    mode: EstimateMode = EstimateMode.BIAS_REDUCED,
    threads: int = 1,
) -> MiseResult:
    """Monte Carlo estimate of the MISE-optimal bandwidth for a known target.

    Each replication draws one sample and scores every grid bandwidth on it.
    The grid minimiser is refined by a parabola through its neighbours in log h.
    """
    kernel = kernel or gaussian_kernel()
    if mc_reps < 1:
        raise InvalidParameterError(f"mc_reps must be at least 1, got {mc_reps}.")
    search = search or BandwidthSearch.for_target(target, n)
    grid = search.grid()

    def run(rep: int) -> np.ndarray:
        return _rep_ise_curve(target, n, kernel, grid, seed, rep, EstimateMode(mode))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(run, range(mc_reps)))
    else:
        curves = [run(rep) for rep in range(mc_reps)]
    mise = np.mean(np.vstack(curves), axis=0)

    best = int(np.argmin(mise))
    if best in (0, grid.size - 1):
        logger.warning("h_MISE search minimum on the boundary h=%.6g", grid[best])
        return MiseResult(float(grid[best]), grid, mise, True)

    window = slice(best - 1, best + 2)
    vertex = parabolic_vertex(np.log(grid[window]), mise[window])
    if vertex is None:
        return MiseResult(float(grid[best]), grid, mise)
    log_h = min(max(vertex, math.log(grid[best - 1])), math.log(grid[best + 1]))
    return MiseResult(math.exp(log_h), grid, mise)


def select(
    spec: SelectorSpec,
    sample: Sample,
    kernel: Kernel | None = None,
    *,
    seed: int | Sequence[int] = 0,
    threads: int = 1,
) -> BandwidthSelection:
    """Run the selector described by ``spec`` on ``sample``."""
    kernel = kernel or gaussian_kernel()
    if spec.method is SelectorMethod.NORMAL_REFERENCE:
        h = normal_reference(sample, spec.beta, kernel)
        return BandwidthSelection(h, spec.name, spec.beta, sigma_hat=sample.robust_scale)
    if spec.method is SelectorMethod.CROSS_VALIDATION:
        return select_cv(
            sample, spec.beta, kernel, spec.search,
            loo_bias_reduced=spec.loo_bias_reduced, loo_weight=spec.loo_weight,
        )
    if spec.method is SelectorMethod.THEORETICAL:
        h = theoretical_bandwidth(spec.target, spec.beta, kernel, sample.n)
        return BandwidthSelection(h, spec.name, spec.beta)
    result = mise_search(spec.target, sample.n, kernel, spec.mc_reps, seed, spec.search, threads=threads)
    return BandwidthSelection(
        result.bandwidth,
        spec.name,
        boundary_hit=result.boundary_hit,
        search_bounds=(float(result.grid[0]), float(result.grid[-1])),
    )
