# tests/modules/test_integrators.py

import math

import numpy as np
import pytest

from netalgebra.modules.errors import NonFiniteDerivative
from netalgebra.modules.integrators import integrate_rk4, step_rk4


def decay(t, x):
    return -x


def test_single_step_exponential():
    x1 = step_rk4(decay, np.array([1.0]), 0.0, 0.1)
    # one step of the truncated series 1 - h + h^2/2 - h^3/6 + h^4/24
    assert x1[0] == pytest.approx(0.9048375, abs=1e-12)
    assert abs(x1[0] - math.exp(-0.1)) < 1e-7


def test_measured_order():
    errors = []
    for n in (10, 20, 40):
        x = integrate_rk4(decay, np.array([1.0]), 0.0, 1.0 / n, n)
        errors.append(abs(x[0] - math.exp(-1.0)))
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    for order in orders:
        assert 3.8 <= order <= 4.2


def test_time_argument_is_passed():
    seen = []

    def rate(t, x):
        seen.append(t)
        return np.ones_like(x)

    x = integrate_rk4(rate, np.zeros(2), 1.0, 0.25, 2)
    np.testing.assert_allclose(x, [0.5, 0.5])
    assert seen[:4] == [1.0, 1.125, 1.125, 1.25]
    assert seen[4] == 1.25


def test_rotation_preserves_radius():
    def spin(t, x):
        return np.array([-x[1], x[0]])

    x = integrate_rk4(spin, np.array([1.0, 0.0]), 0.0, 1e-3, 1000)
    assert np.hypot(*x) == pytest.approx(1.0, abs=1e-12)
    assert x[0] == pytest.approx(math.cos(1.0), abs=1e-12)


def test_non_finite_derivative():
    def blow_up(t, x):
        return np.array([np.inf])

    with pytest.raises(NonFiniteDerivative):
        step_rk4(blow_up, np.array([1.0]), 0.0, 0.1)


def test_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        step_rk4(decay, np.array([1.0]), 0.0, 0.0)


def test_input_state_untouched():
    x0 = np.array([1.0, 2.0])
    integrate_rk4(decay, x0, 0.0, 0.1, 3)
    np.testing.assert_array_equal(x0, [1.0, 2.0])
