"""One-dimensional minimisers used by the bandwidth selectors."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARED = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def golden_section_search(
    func: Callable[[float], float], a: float, b: float, tol: float = 1e-5
) -> tuple[float, float]:
    """Shrink [a, b] around the minimum of a unimodal func until it is at most tol wide.

    Returns the final bracketing interval. Each iteration reuses one of the
    two interior evaluations.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b

    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARED * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)

    for _ in range(steps - 1):
        if yc <= yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARED * h
            yc = func(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = func(d)

    if yc <= yd:
        return a, d
    return c, b


def golden_section_minimize(
    func: Callable[[float], float], a: float, b: float, tol: float = 1e-5
) -> float:
    """Midpoint of the golden-section bracket."""
    lo, hi = golden_section_search(func, a, b, tol)
    return 0.5 * (lo + hi)


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Strictly increasing log-spaced grid including both endpoints."""
    return np.geomspace(lo, hi, count)


def parabolic_vertex(x: np.ndarray, y: np.ndarray) -> float | None:
    """Vertex of the parabola through three points, or None if it opens downward."""
    x0, x1, x2 = (float(v) for v in x)
    y0, y1, y2 = (float(v) for v in y)
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    if denom == 0:
        return None
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return None
    return -b / (2 * a)
