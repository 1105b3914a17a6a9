import math

import numpy as np
import pytest

from betakde.kernels import gaussian_kernel
from betakde.quadrature import QuadratureSpec, simpson

WIDE = QuadratureSpec(-12.0, 12.0, 4096)


def moment(func, power):
    return simpson(lambda u: u**power * func(u), WIDE)


def test_gaussian_is_a_density():
    kernel = gaussian_kernel()
    assert simpson(kernel.evaluate, WIDE) == pytest.approx(1.0, abs=1e-12)
    assert moment(kernel.evaluate, 1) == pytest.approx(0.0, abs=1e-14)


def test_gaussian_moments_match_constants():
    kernel = gaussian_kernel()
    assert moment(kernel.evaluate, 2) == pytest.approx(kernel.mu2, rel=1e-10)
    assert moment(kernel.evaluate, 4) == pytest.approx(kernel.mu4, rel=1e-10)


def test_roughness_constants_match_quadrature():
    kernel = gaussian_kernel()
    assert simpson(lambda u: kernel.evaluate(u) ** 2, WIDE) == pytest.approx(kernel.roughness, rel=1e-10)
    assert simpson(lambda u: kernel.effective(u) ** 2, WIDE) == pytest.approx(
        kernel.bias_reduced_roughness, rel=1e-10
    )
    assert kernel.bias_reduced_roughness == pytest.approx(27 / (32 * math.sqrt(math.pi)))


def test_second_derivative_matches_finite_difference():
    kernel = gaussian_kernel()
    u = np.linspace(-4, 4, 41)
    step = 1e-4
    numeric = (kernel.evaluate(u + step) - 2 * kernel.evaluate(u) + kernel.evaluate(u - step)) / step**2
    np.testing.assert_allclose(kernel.second_derivative(u), numeric, atol=1e-7)


def test_effective_kernel_integrates_to_one_and_kills_second_moment():
    kernel = gaussian_kernel()
    assert simpson(kernel.effective, WIDE) == pytest.approx(1.0, abs=1e-12)
    # K - K''/2 is a fourth-order kernel.
    assert moment(kernel.effective, 2) == pytest.approx(0.0, abs=1e-10)
    assert moment(kernel.effective, 4) == pytest.approx(kernel.mu4 - 6 * kernel.mu2, rel=1e-10)


def test_kernel_is_symmetric():
    kernel = gaussian_kernel()
    u = np.linspace(0, 6, 25)
    np.testing.assert_array_equal(kernel.evaluate(u), kernel.evaluate(-u))
    np.testing.assert_array_equal(kernel.effective(u), kernel.effective(-u))
