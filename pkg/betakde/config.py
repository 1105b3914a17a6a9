"""Validated run and simulation settings."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .bandwidth import DEFAULT_MISE_REPS, LOO_WEIGHT, PUBLISHED_LOO_WEIGHT, SelectorMethod
from .density import EstimateMode
from .errors import InvalidParameterError

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
FAITHFUL_PATH = DATA_DIR / "faithful107.csv"

DEFAULT_BETA = 2.0
DEFAULT_SEED = 42
DEFAULT_REPS = 200
DEFAULT_GRID_COUNT = 512
DEFAULT_MUS = (0.0, 1.0, 5.0)
DEFAULT_SIGMAS = (1.0, 0.5, 0.1)
DEFAULT_SIZES = (50, 200, 700)
DEFAULT_SELECTORS = ("nr:2", "cv:2", "cv:1.1", "cv:1.5", "cv:1.9")

SELECTOR_ALIASES = {
    "nr": SelectorMethod.NORMAL_REFERENCE,
    "cv": SelectorMethod.CROSS_VALIDATION,
    "lscv": SelectorMethod.CROSS_VALIDATION,
    "theoretical": SelectorMethod.THEORETICAL,
    "th": SelectorMethod.THEORETICAL,
    "mise": SelectorMethod.MISE_SEARCH,
}


def default_threads() -> int:
    """Thread count from BETAKDE_THREADS, else the machine's core count."""
    raw = os.getenv("BETAKDE_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError as exc:
            raise InvalidParameterError(f"BETAKDE_THREADS must be an integer, got {raw!r}.") from exc
        if value < 1:
            raise InvalidParameterError(f"BETAKDE_THREADS must be at least 1, got {value}.")
        return value
    return os.cpu_count() or 1


def parse_selector(token: str) -> tuple[SelectorMethod, float]:
    """Turn 'cv:1.5' into (CROSS_VALIDATION, 1.5); the beta part defaults to 2."""
    name, _, beta_text = token.strip().lower().partition(":")
    if name not in SELECTOR_ALIASES:
        raise InvalidParameterError(
            f"Unknown selector {token!r}; expected one of {', '.join(sorted(SELECTOR_ALIASES))}."
        )
    try:
        beta = float(beta_text) if beta_text else DEFAULT_BETA
    except ValueError as exc:
        raise InvalidParameterError(f"Selector {token!r} has a non-numeric beta.") from exc
    if not beta > 1:
        raise InvalidParameterError(f"Selector {token!r} needs beta > 1.")
    return SELECTOR_ALIASES[name], beta


class CellSpec(BaseModel):
    """One mixture design point: 0.5 N(0, 1) + 0.5 N(mu, sigma^2) sampled at size n."""

    mu: float
    sigma: float = Field(gt=0)
    n: int = Field(ge=10)

    @property
    def key(self) -> tuple[float, float, int]:
        return (self.mu, self.sigma, self.n)


def default_cells() -> list[CellSpec]:
    """The 27-cell study grid: every (mu, sigma, n) combination of the defaults."""
    return [
        CellSpec(mu=mu, sigma=sigma, n=n)
        for mu in DEFAULT_MUS
        for sigma in DEFAULT_SIGMAS
        for n in DEFAULT_SIZES
    ]


def parse_cells(text: str) -> list[CellSpec]:
    """Parse 'mu,sigma,n;mu,sigma,n' into cells."""
    cells = []
    for chunk in filter(None, (part.strip() for part in text.split(";"))):
        pieces = [piece.strip() for piece in chunk.split(",")]
        if len(pieces) != 3:
            raise InvalidParameterError(f"Cell {chunk!r} must look like mu,sigma,n.")
        try:
            cells.append(CellSpec(mu=float(pieces[0]), sigma=float(pieces[1]), n=int(pieces[2])))
        except ValueError as exc:
            raise InvalidParameterError(f"Cell {chunk!r} is not valid: {exc}") from exc
    if not cells:
        raise InvalidParameterError("At least one simulation cell is required.")
    return cells


class SimulationConfig(BaseModel):
    """Settings for one Monte Carlo study run."""

    cells: list[CellSpec] = Field(default_factory=default_cells, min_length=1)
    reps: int = Field(default=DEFAULT_REPS, ge=1)
    mise_reps: int = Field(default=DEFAULT_MISE_REPS, ge=1)
    selectors: list[str] = Field(default_factory=lambda: list(DEFAULT_SELECTORS), min_length=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    threads: int = Field(default=1, ge=1)
    loo_bias_reduced: bool = False
    published_loo_weight: bool = False

    @field_validator("selectors")
    @classmethod
    def _check_selectors(cls, value: list[str]) -> list[str]:
        for token in value:
            parse_selector(token)
        return value

    @property
    def loo_weight(self) -> float:
        return PUBLISHED_LOO_WEIGHT if self.published_loo_weight else LOO_WEIGHT

    def selector_tokens(self) -> list[tuple[SelectorMethod, float]]:
        return [parse_selector(token) for token in self.selectors]


Command = Literal["estimate", "select", "simulate", "oracle"]


class RunConfig(BaseModel):
    """Everything one CLI invocation needs, checked before any work starts."""

    command: Command
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    column: Optional[str] = None
    beta: float = DEFAULT_BETA
    selector: Literal["nr", "cv", "theoretical"] = "nr"
    bandwidth: Optional[float] = Field(default=None, gt=0)
    mode: EstimateMode = EstimateMode.BIAS_REDUCED
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    reps: int = Field(default=DEFAULT_REPS, ge=1)
    mise_reps: int = Field(default=DEFAULT_MISE_REPS, ge=1)
    threads: int = Field(default_factory=default_threads, ge=1)
    grid_count: int = Field(default=DEFAULT_GRID_COUNT, ge=2)
    loo_bias_reduced: bool = False
    published_loo_weight: bool = False
    mu: float = 0.0
    sigma: float = Field(default=1.0, gt=0)
    cells: Optional[str] = None
    selectors: Optional[str] = None

    @field_validator("beta")
    @classmethod
    def _check_beta(cls, value: float) -> float:
        if not value > 1:
            raise ValueError(f"beta must exceed 1, got {value}")
        return value

    @model_validator(mode="after")
    def _check_settings(self) -> RunConfig:
        if self.command in ("estimate", "select"):
            if self.input_path is None:
                self.input_path = FAITHFUL_PATH
            if not self.input_path.is_file():
                raise ValueError(f"input file {self.input_path} does not exist")
        if self.command in ("estimate", "simulate") and self.output_path is None:
            raise ValueError(f"the {self.command} command needs --output")
        if self.output_path is not None:
            parent = self.output_path.resolve().parent
            if not parent.is_dir():
                raise ValueError(f"output directory {parent} does not exist")
            if not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {parent} is not writable")
        if self.command == "simulate":
            try:
                self.simulation()
            except ValidationError as exc:
                raise ValueError(f"simulation settings are invalid: {exc}") from exc
        return self

    def simulation(self) -> SimulationConfig:
        return SimulationConfig(
            cells=parse_cells(self.cells) if self.cells else default_cells(),
            reps=self.reps,
            mise_reps=self.mise_reps,
            selectors=self.selectors.split(",") if self.selectors else list(DEFAULT_SELECTORS),
            seed=self.seed,
            threads=self.threads,
            loo_bias_reduced=self.loo_bias_reduced,
            published_loo_weight=self.published_loo_weight,
        )
