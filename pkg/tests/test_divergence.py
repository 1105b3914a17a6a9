import math

import numpy as np
import pytest
from scipy.stats import norm

from betakde.divergence import (
    OPTIMAL_BANDWIDTH_COEFFICIENT,
    BetaParam,
    asymptotic_expected_divergence,
    beta_divergence,
    ise,
    normal_target,
    optimal_bandwidth,
    target_functionals,
)
from betakde.errors import InvalidParameterError, UnboundedBandwidthError
from betakde.kernels import gaussian_kernel
from betakde.optimize import golden_section_minimize
from betakde.quadrature import QuadratureSpec, exact_gaussian_functionals

SPEC = QuadratureSpec(-12.0, 12.0, 2048)


def random_curve(rng):
    """A nonnegative two-bump curve, not necessarily normalised."""
    centres = rng.uniform(-2, 2, size=2)
    scales = rng.uniform(0.3, 2.0, size=2)
    weights = rng.uniform(0.1, 1.0, size=2)
    return lambda x: sum(w * norm.pdf(x, c, s) for w, c, s in zip(weights, centres, scales))


def test_twice_d2_equals_ise_on_random_pairs(rng):
    for _ in range(50):
        target = normal_target(rng.uniform(-1, 1), rng.uniform(0.5, 2.0))
        curve = random_curve(rng)
        assert abs(2 * beta_divergence(curve, target, 2.0, SPEC) - ise(curve, target, SPEC)) < 1e-10


@pytest.mark.parametrize("beta", [1.1, 1.5, 2.0, 3.0])
def test_divergence_vanishes_at_truth_and_is_positive_elsewhere(beta):
    target = normal_target(0.0, 1.0)
    assert beta_divergence(target.pdf, target, beta, SPEC) == pytest.approx(0.0, abs=1e-12)
    shifted = normal_target(0.5, 1.2)
    assert beta_divergence(shifted.pdf, target, beta, SPEC) > 1e-4


def test_negative_estimate_values_are_clipped():
    target = normal_target()
    negative_dip = lambda x: target.pdf(x) - 0.05 * norm.pdf(x, 4.0, 0.3)
    clipped = lambda x: np.maximum(negative_dip(x), 0.0)
    assert beta_divergence(negative_dip, target, 1.5, SPEC) == pytest.approx(
        beta_divergence(clipped, target, 1.5, SPEC), rel=1e-12
    )


@pytest.mark.parametrize("value", [1.0, 0.5, -2.0, math.nan, math.inf])
def test_beta_must_exceed_one(value):
    with pytest.raises(InvalidParameterError):
        BetaParam(value)


def test_optimal_bandwidth_minimises_the_asymptotic_divergence(rng):
    kernel = gaussian_kernel()
    for _ in range(9):
        i1 = rng.uniform(0.5, 2.0)
        i2 = rng.uniform(0.5, 5.0)
        n = int(rng.integers(50, 2000))
        h_star = golden_section_minimize(
            lambda h: asymptotic_expected_divergence(h, n, kernel, i1, i2), 0.05, 3.0, tol=1e-11
        )
        ratio = h_star**9 * n * kernel.mu4**2 * i2 / (kernel.roughness * i1)
        assert ratio == pytest.approx(OPTIMAL_BANDWIDTH_COEFFICIENT, rel=1e-6)
        assert optimal_bandwidth(i1, i2, n, kernel) == pytest.approx(h_star, rel=1e-6)


def test_optimal_bandwidth_needs_curvature():
    with pytest.raises(UnboundedBandwidthError):
        optimal_bandwidth(1.0, 0.0, 100, gaussian_kernel())


@pytest.mark.parametrize("beta", [1.1, 1.5, 2.0, 2.5])
def test_target_functionals_match_gaussian_closed_forms(beta):
    target = normal_target(2.0, 0.5)
    expected = exact_gaussian_functionals(0.5, beta)
    got = target_functionals(target, beta)
    assert got.i1 == pytest.approx(expected.i1, rel=1e-8)
    assert got.i2 == pytest.approx(expected.i2, rel=1e-8)


def test_normal_target_fourth_derivative_matches_finite_difference():
    target = normal_target(0.3, 0.8)
    x = np.linspace(-2, 2, 9)
    step = 5e-3
    offsets = np.array([-2, -1, 0, 1, 2]) * step
    weights = np.array([1, -4, 6, -4, 1]) / step**4
    numeric = sum(w * target.pdf(x + o) for w, o in zip(weights, offsets))
    np.testing.assert_allclose(target.fourth_derivative(x), numeric, atol=1e-3)


def test_target_draws_need_a_sampler(rng):
    target = normal_target()
    assert target.draw(5, rng).shape == (5,)
    no_sampler = type(target)(target.pdf, target.fourth_derivative, target.support_hint)
    with pytest.raises(InvalidParameterError):
        no_sampler.draw(5, rng)


def test_d2_between_shifted_normals_matches_convolution():
    standard = normal_target()
    shifted = normal_target(0.5, 1.0)
    expected = (1 - math.exp(-0.0625)) / math.sqrt(4 * math.pi)
    assert beta_divergence(standard.pdf, shifted, 2.0, SPEC) == pytest.approx(expected, abs=1e-8)


def test_asymptotic_divergence_is_strictly_convex():
    kernel = gaussian_kernel()
    i1, i2 = 1.0, 105 / (32 * math.sqrt(math.pi))
    for h in np.geomspace(0.01, 10.0, 41):
        step = 1e-3 * h
        values = [asymptotic_expected_divergence(h + k * step, 100, kernel, i1, i2) for k in (-1, 0, 1)]
        assert values[0] - 2 * values[1] + values[2] > 0
    h_star = optimal_bandwidth(i1, i2, 100, kernel)
    assert asymptotic_expected_divergence(2 * h_star, 100, kernel, i1, i2) > asymptotic_expected_divergence(
        h_star, 100, kernel, i1, i2
    )
