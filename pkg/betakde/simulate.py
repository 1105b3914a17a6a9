"""Monte Carlo study on two-component normal mixtures."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm

from .bandwidth import (
    LOO_WEIGHT,
    TRIAL_STREAM,
    SelectorMethod,
    SelectorSpec,
    mise_search,
    select,
    stream_rng,
    trial_ise_spec,
)
from .config import CellSpec, SimulationConfig
from .density import DensityEstimate, EstimateMode, Sample, bias_reduced_at, parzen_at
from .divergence import TargetDensity, ise
from .errors import BetaKdeError, InvalidParameterError, MissingCellError
from .kernels import Kernel, gaussian_kernel

logger = logging.getLogger(__name__)

SUPPORT_SIGMAS = 8.0
# Table names and the summary column each one reports.
TABLE_COLUMNS = {
    "table1_re.csv": "re",
    "table2_meanh.csv": "mean_h",
    "table3_relerr.csv": "mean_rel_err",
}


def _gaussian_fourth_derivative(x: np.ndarray, mean: float, sd: float) -> np.ndarray:
    z = (x - mean) / sd
    return norm.pdf(z) / sd**5 * (z**4 - 6.0 * z**2 + 3.0)


@dataclass(frozen=True)
class NormalMixture:
    """weight * N(0, 1) + (1 - weight) * N(mu, sigma^2)."""

    mu: float
    sigma: float
    weight: float = 0.5

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise InvalidParameterError(f"Mixture sigma must be positive, got {self.sigma}.")
        if not 0 <= self.weight <= 1:
            raise InvalidParameterError(f"Mixture weight must lie in [0, 1], got {self.weight}.")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * norm.pdf(x) + (1 - self.weight) * norm.pdf(x, loc=self.mu, scale=self.sigma)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * norm.cdf(x) + (1 - self.weight) * norm.cdf(x, loc=self.mu, scale=self.sigma)

    def fourth_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self.weight * _gaussian_fourth_derivative(x, 0.0, 1.0) + (
            1 - self.weight
        ) * _gaussian_fourth_derivative(x, self.mu, self.sigma)

    @property
    def mean(self) -> float:
        return (1 - self.weight) * self.mu

    @property
    def sd(self) -> float:
        w = self.weight
        variance = w + (1 - w) * self.sigma**2 + w * (1 - w) * self.mu**2
        return math.sqrt(variance)

    @property
    def support_hint(self) -> tuple[float, float]:
        reach = SUPPORT_SIGMAS * max(1.0, self.sigma)
        return (min(0.0, self.mu) - reach, max(0.0, self.mu) + reach)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Bernoulli(weight) component labels, then one Gaussian draw each."""
        first = rng.random(n) < self.weight
        z = rng.standard_normal(n)
        return np.where(first, z, self.mu + self.sigma * z)

    def as_target(self) -> TargetDensity:
        return TargetDensity(
            pdf=self.pdf,
            fourth_derivative=self.fourth_derivative,
            support_hint=self.support_hint,
            mean=self.mean,
            sd=self.sd,
            sampler=self.draw,
        )

    @classmethod
    def for_cell(cls, cell: CellSpec) -> NormalMixture:
        return cls(cell.mu, cell.sigma)


def sample_mixture(mix: NormalMixture, n: int, seed: int | np.random.Generator) -> Sample:
    """Draw n points from the mixture as a sorted Sample; ``seed`` may be an int or a Generator."""
    if n < 2:
        raise InvalidParameterError(f"A sample needs at least 2 observations, got {n}.")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Sample.from_values(mix.draw(n, rng))


@dataclass(frozen=True)
class TrialRecord:
    """One selector on one replication. Skipped records carry NaNs and a reason."""

    mu: float
    sigma: float
    n: int
    rep: int
    selector: str
    h_hat: float
    ise_at_h_hat: float
    ise_at_h_mise: float
    h_mise: float
    boundary_hit: bool = False
    skip_reason: str | None = None

    @property
    def cell(self) -> tuple[float, float, int]:
        return (self.mu, self.sigma, self.n)

    @property
    def skipped(self) -> bool:
        return self.skip_reason is not None


def cell_selectors(
    tokens: Sequence[tuple[SelectorMethod, float]],
    mixture: NormalMixture,
    loo_bias_reduced: bool = False,
    mise_reps: int = 200,
    loo_weight: float = LOO_WEIGHT,
) -> list[SelectorSpec]:
    """Bind parsed selector tokens to a cell's mixture target."""
    target = mixture.as_target()
    return [
        SelectorSpec(
            method, beta, target=target, mc_reps=mise_reps,
            loo_bias_reduced=loo_bias_reduced, loo_weight=loo_weight,
        )
        for method, beta in tokens
    ]


def trial_ise(est: DensityEstimate, target: TargetDensity) -> float:
    """ISE of one trial estimate over the target support and the estimate's own range."""
    return ise(est, target, trial_ise_spec(target, est))


def run_cell(
    cell: CellSpec,
    selectors: Sequence[SelectorSpec],
    reps: int,
    seed: int,
    *,
    cell_index: int = 0,
    mise_reps: int = 200,
    threads: int = 1,
    kernel: Kernel | None = None,
) -> list[TrialRecord]:
    """Evaluate every selector on ``reps`` samples from the cell's mixture.

    h_MISE is searched first on its own seed stream. All selectors of a rep
    share that rep's sample.
    """
    if reps < 1:
        raise InvalidParameterError(f"reps must be at least 1, got {reps}.")
    kernel = kernel or gaussian_kernel()
    mixture = NormalMixture.for_cell(cell)
    target = mixture.as_target()
    seed_key = [seed, cell_index]

    h_mise = mise_search(target, cell.n, kernel, mise_reps, seed_key, threads=threads).bandwidth
    logger.info("cell mu=%g sigma=%g n=%d: h_MISE=%.6g", cell.mu, cell.sigma, cell.n, h_mise)

    def run_rep(rep: int) -> list[TrialRecord]:
        rng = stream_rng(seed_key, rep, TRIAL_STREAM)
        sample = sample_mixture(mixture, cell.n, rng)
        base = DensityEstimate(sample, h_mise, kernel, EstimateMode.BIAS_REDUCED)
        ise_mise = trial_ise(base, target)
        records = []
        for spec in selectors:
            try:
                chosen = select(spec, sample, kernel, seed=seed_key)
                ise_hat = trial_ise(base.with_bandwidth(chosen.bandwidth), target)
            except BetaKdeError as exc:
                logger.warning("%s skipped on rep %d of cell %s: %s", spec.name, rep, cell.key, exc)
                records.append(
                    TrialRecord(
                        cell.mu, cell.sigma, cell.n, rep, spec.name,
                        math.nan, math.nan, ise_mise, h_mise, skip_reason=str(exc),
                    )
                )
                continue
            records.append(
                TrialRecord(
                    cell.mu, cell.sigma, cell.n, rep, spec.name,
                    chosen.bandwidth, ise_hat, ise_mise, h_mise, chosen.boundary_hit,
                )
            )
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(run_rep, range(reps)))
    else:
        per_rep = [run_rep(rep) for rep in range(reps)]

    order = {spec.name: position for position, spec in enumerate(selectors)}
    records = [record for batch in per_rep for record in batch]
    return sorted(records, key=lambda r: (order[r.selector], r.rep))


@dataclass(frozen=True)
class SummaryTable:
    """One row per (cell, selector) with RE, its standard error, meanH and meanRelErr."""

    rows: pd.DataFrame

    def table(self, column: str) -> pd.DataFrame:
        """Long format (mu, sigma, n, selector, value) for one summary column."""
        frame = self.rows[["mu", "sigma", "n", "selector", column]]
        return frame.rename(columns={column: "value"}).reset_index(drop=True)

    def hmise(self) -> pd.DataFrame:
        """One h_MISE row per cell."""
        return self.rows[["mu", "sigma", "n", "h_mise"]].drop_duplicates().reset_index(drop=True)

    def row(self, cell: tuple[float, float, int], selector: str) -> pd.Series:
        """Summary row for one (cell, selector); MissingCellError if absent."""
        mu, sigma, n = cell
        match = self.rows[
            (self.rows["mu"] == mu)
            & (self.rows["sigma"] == sigma)
            & (self.rows["n"] == n)
            & (self.rows["selector"] == selector)
        ]
        if match.empty:
            raise MissingCellError((mu, sigma, n, selector))
        return match.iloc[0]


def _ratio_standard_error(numerator: np.ndarray, denominator: np.ndarray) -> float:
    """Delta-method standard error of mean(numerator) / mean(denominator)."""
    m = numerator.size
    if m < 2:
        return 0.0
    a, b = numerator.mean(), denominator.mean()
    ratio = a / b
    cov = np.cov(numerator, denominator, ddof=1)
    variance = (cov[0, 0] - 2 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]) / (b * b * m)
    return float(math.sqrt(max(variance, 0.0)))


GROUP_KEYS = ["mu", "sigma", "n", "selector"]
# Reported relative efficiencies, logged next to the measured value.
PUBLISHED_RE = {(0.0, 1.0, 50, "NR(2)"): 0.934}


def summarize(records: Sequence[TrialRecord]) -> SummaryTable:
    """Aggregate trial records into RE, meanH and meanRelErr per (cell, selector)."""
    if not records:
        raise MissingCellError(())
    frame = pd.DataFrame([asdict(record) for record in records])
    rows = []
    for key, group in frame.groupby(GROUP_KEYS, sort=False):
        used = group[group["skip_reason"].isna()]
        if used.empty:
            raise MissingCellError(tuple(key))
        ise_mise = used["ise_at_h_mise"].to_numpy()
        ise_hat = used["ise_at_h_hat"].to_numpy()
        h_mise = float(used["h_mise"].iloc[0])
        re = float(ise_mise.mean() / ise_hat.mean())
        re_se = _ratio_standard_error(ise_mise, ise_hat)
        if re > 1 + 3 * re_se:
            logger.warning("RE=%.4f exceeds 1 + 3 SE (SE=%.4f) for %s", re, re_se, key)
        if tuple(key) in PUBLISHED_RE:
            logger.info("RE=%.4f (SE=%.4f) for %s; reported value %.3f", re, re_se, key, PUBLISHED_RE[tuple(key)])
        rows.append(
            {
                "mu": float(key[0]),
                "sigma": float(key[1]),
                "n": int(key[2]),
                "selector": key[3],
                "re": re,
                "re_se": re_se,
                "mean_h": float(used["h_hat"].mean()),
                "mean_rel_err": float((used["h_hat"] / h_mise - 1).abs().mean()),
                "h_mise": h_mise,
                "reps": int(len(used)),
                "skipped": int(len(group) - len(used)),
                "boundary_hits": int(used["boundary_hit"].sum()),
            }
        )
    return SummaryTable(pd.DataFrame(rows))


def records_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """Per-trial export with the per-rep ISE ratio used for boxplots."""
    frame = pd.DataFrame([asdict(record) for record in records])
    frame["ise_ratio"] = frame["ise_at_h_mise"] / frame["ise_at_h_hat"]
    return frame


@dataclass(frozen=True)
class SimulationResult:
    """Every trial record of a run and the summary built from them."""

    records: list[TrialRecord]
    summary: SummaryTable


def run_simulation(config: SimulationConfig, kernel: Kernel | None = None) -> SimulationResult:
    """Run every configured cell in order and summarise the pooled records."""
    tokens = config.selector_tokens()
    records: list[TrialRecord] = []
    for index, cell in enumerate(config.cells):
        mixture = NormalMixture.for_cell(cell)
        selectors = cell_selectors(
            tokens, mixture, config.loo_bias_reduced, config.mise_reps, config.loo_weight
        )
        records.extend(
            run_cell(
                cell,
                selectors,
                config.reps,
                config.seed,
                cell_index=index,
                mise_reps=config.mise_reps,
                threads=config.threads,
                kernel=kernel,
            )
        )
    return SimulationResult(records, summarize(records))


@dataclass(frozen=True)
class PointMeans:
    """Monte Carlo means of both estimates at one point, with their standard errors."""

    plain: float
    reduced: float
    plain_se: float
    reduced_se: float

    def gaps(self, truth: float) -> tuple[float, float]:
        """Absolute distance of each mean from ``truth``, plain first."""
        return abs(self.plain - truth), abs(self.reduced - truth)


def mean_estimates_at(
    target: TargetDensity,
    n: int,
    h: float,
    x: float,
    reps: int,
    seed: int,
    kernel: Kernel | None = None,
) -> PointMeans:
    """Average the plain and bias-reduced estimates at ``x`` over ``reps`` seeded samples."""
    kernel = kernel or gaussian_kernel()
    plain = np.empty(reps)
    reduced = np.empty(reps)
    for rep in range(reps):
        sample = Sample.from_values(target.draw(n, stream_rng(seed, rep, TRIAL_STREAM)))
        est = DensityEstimate(sample, h, kernel)
        plain[rep] = parzen_at(est, x)
        reduced[rep] = bias_reduced_at(est, x)
    root = math.sqrt(reps)
    return PointMeans(
        float(plain.mean()),
        float(reduced.mean()),
        float(plain.std(ddof=1) / root) if reps > 1 else math.nan,
        float(reduced.std(ddof=1) / root) if reps > 1 else math.nan,
    )
