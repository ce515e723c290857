import numpy as np
import pytest

from src.errors import NumericalError
from src.optimizer import initial_simplex, nelder_mead


def test_quadratic_minimum():
    result = nelder_mead(lambda x: float(np.sum((x - 3.0) ** 2)), np.zeros(3), xtol=1e-9, ftol=1e-16)
    assert result.converged
    np.testing.assert_allclose(result.x, 3.0, atol=1e-6)
    assert result.fun < 1e-11


def test_plateau_converges_to_its_value():
    result = nelder_mead(lambda x: 4.0, np.array([1.0, -1.0]))
    assert result.converged
    assert result.fun == 4.0


def test_best_value_never_increases():
    def rosenbrock(x):
        return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

    result = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), max_iter=2000)
    trace = np.array(result.trace)
    assert np.all(np.diff(trace) <= 0)
    assert result.fun <= rosenbrock(np.array([-1.2, 1.0]))
    np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-3)


def test_non_finite_start_is_an_error():
    with pytest.raises(NumericalError):
        nelder_mead(lambda x: float("nan"), np.zeros(2))


def test_non_finite_region_is_avoided():
    def walled(x):
        if x[0] < 0:
            return float("inf")
        return float((x[0] - 0.5) ** 2 + x[1] ** 2)

    result = nelder_mead(walled, np.array([0.05, 0.3]))
    assert result.converged
    np.testing.assert_allclose(result.x, [0.5, 0.0], atol=1e-4)


def test_iteration_cap_reports_not_converged():
    result = nelder_mead(lambda x: float(np.sum(x**2)), np.full(4, 10.0), max_iter=5)
    assert not result.converged
    assert result.iterations == 5


def test_initial_simplex_shape():
    simplex = initial_simplex(np.zeros(5), 0.1)
    assert simplex.shape == (6, 5)
    np.testing.assert_allclose(simplex[1:], 0.1 * np.eye(5))


def test_raising_start_is_a_numerical_error():
    def invalid(x):
        raise ValueError("parameters out of range")

    with pytest.raises(NumericalError, match="starting point"):
        nelder_mead(invalid, np.zeros(2))
