"""Bias-reduced kernel density estimation with beta-divergence bandwidth selection."""

from __future__ import annotations

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthSearch,
    BandwidthSelection,
    SelectorMethod,
    SelectorSpec,
    cv_objective,
    mise_search,
    normal_reference,
    select,
    select_cv,
    theoretical_bandwidth,
)
from .density import DensityEstimate, EstimateMode, EvaluationGrid, Sample, evaluate_grid
from .divergence import BetaParam, TargetDensity, beta_divergence, ise, normal_target, optimal_bandwidth
from .errors import BetaKdeError
from .kernels import Kernel, gaussian_kernel
from .simulate import NormalMixture, run_simulation, sample_mixture, summarize

__all__ = [
    "BandwidthSearch",
    "BandwidthSelection",
    "BetaKdeError",
    "BetaParam",
    "DensityEstimate",
    "EstimateMode",
    "EvaluationGrid",
    "Kernel",
    "NormalMixture",
    "Sample",
    "SelectorMethod",
    "SelectorSpec",
    "TargetDensity",
    "beta_divergence",
    "cv_objective",
    "evaluate_grid",
    "gaussian_kernel",
    "ise",
    "mise_search",
    "normal_reference",
    "normal_target",
    "optimal_bandwidth",
    "run_simulation",
    "sample_mixture",
    "select",
    "select_cv",
    "summarize",
    "theoretical_bandwidth",
    "__version__",
]
