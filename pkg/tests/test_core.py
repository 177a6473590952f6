import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from core.grid import Grid, GridFunction, cumulative_integral, environment, integrate
from core.parallel import parallel_map
from schemas.errors import DomainError

GRID = Grid(1.0, 2048)


def test_grid_nodes():
    g = Grid(2.0, 8)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0
    assert np.all(np.diff(g.nodes) > 0)
    assert_allclose(g.nodes, np.arange(9) * 0.25)
    assert g.refined().n == 16


@pytest.mark.parametrize("m, n", [(0.0, 8), (-1.0, 8), (1.0, 6), (1.0, 9)])
def test_grid_rejects_bad_parameters(m, n):
    with pytest.raises(DomainError):
        Grid(m, n)


def test_gridfunction_rejects_non_finite():
    with pytest.raises(DomainError):
        GridFunction(Grid(1.0, 8), np.full(9, np.nan))
    with pytest.raises(DomainError):
        GridFunction(Grid(1.0, 8), np.ones(8))


def test_gridfunction_interpolates_linearly():
    f = GridFunction.from_callable(Grid(1.0, 8), lambda s: 2.0 * s)
    assert f(0.3) == pytest.approx(0.6)
    with pytest.raises(DomainError):
        f(1.01)
    with pytest.raises(DomainError):
        f(-0.1)


def test_integrate_examples():
    assert integrate(GridFunction.constant(GRID, 1.0), 0, 1) == pytest.approx(1.0, abs=1e-14)
    linear = GridFunction.from_callable(GRID, lambda s: 1 - s / 2)
    assert integrate(linear, 0, 1) == pytest.approx(0.75, abs=1e-14)
    decay = GridFunction.from_callable(GRID, lambda s: np.exp(-s))
    assert abs(integrate(decay, 0, 1) - (1 - math.exp(-1))) <= 1e-7


def test_integrate_subinterval_is_exact_for_linear():
    linear = GridFunction.from_callable(Grid(1.0, 8), lambda s: 1 - s / 2)
    # ∫_{0.1}^{0.7} (1 - s/2) ds
    exact = (0.7 - 0.7**2 / 4) - (0.1 - 0.1**2 / 4)
    assert integrate(linear, 0.1, 0.7) == pytest.approx(exact, abs=1e-14)
    assert integrate(linear, 0.4, 0.4) == 0.0


@pytest.mark.parametrize("a, b", [(0.6, 0.2), (-0.1, 0.5), (0.0, 1.5)])
def test_integrate_rejects_bad_bounds(a, b):
    with pytest.raises(DomainError):
        integrate(GridFunction.constant(GRID, 1.0), a, b)


def test_cumulative_integral_examples():
    g = Grid(1.0, 64)
    k = np.arange(65)
    one = GridFunction.constant(g, 1.0)
    assert_allclose(cumulative_integral(one).values, k / 64, atol=1e-14)
    backward = cumulative_integral(one, from_zero=False).values
    assert_allclose(backward, 1 - k / 64, atol=1e-14)
    assert backward[-1] == 0.0
    linear = GridFunction.from_callable(g, lambda s: 1 - s / 2)
    assert_allclose(cumulative_integral(linear).values, g.nodes - g.nodes**2 / 4, atol=1e-14)


def test_trapezoid_converges_at_second_order():
    errors = []
    for n in (64, 128, 256):
        f = GridFunction.from_callable(Grid(1.0, n), lambda s: np.exp(-s) * np.cos(3 * s))
        exact = (np.exp(-1) * (3 * np.sin(3) - np.cos(3)) + 1) / 10
        errors.append(abs(integrate(f, 0, 1) - exact))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for ratio in ratios:
        assert 3.5 <= ratio <= 4.5


def test_environment_worked_example():
    u = GridFunction.from_callable(GRID, lambda s: 1 - s / 2)
    w = GridFunction.constant(GRID, 1.0)
    Q = environment(u, 0.5, w)
    s = GRID.nodes
    assert_allclose(Q.values, s**2 / 8 - s / 2 + 0.75, atol=1e-12)
    assert Q(0.0) == pytest.approx(0.75)


def test_environment_trivial_cases():
    g = Grid(1.0, 32)
    w = GridFunction.constant(g, 1.0)
    assert np.all(environment(GridFunction.constant(g, 0.0), 0.3, w).values == 0.0)
    assert_allclose(environment(GridFunction.constant(g, 1.0), 1.0, w).values, 1.0, atol=1e-14)


def test_environment_rejects_mismatch_and_bad_alpha():
    w = GridFunction.constant(Grid(1.0, 16), 1.0)
    u = GridFunction.constant(Grid(1.0, 32), 1.0)
    with pytest.raises(DomainError):
        environment(u, 0.5, w)
    with pytest.raises(DomainError):
        environment(GridFunction.constant(Grid(1.0, 16), 1.0), 1.5, w)


SMALL = Grid(2.0, 16)
densities = st.lists(st.floats(0.0, 10.0), min_size=17, max_size=17).map(np.array)
weights = st.lists(st.floats(0.1, 5.0), min_size=17, max_size=17).map(np.array)


@settings(max_examples=50, deadline=None)
@given(densities, densities, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1), weights)
def test_environment_is_linear(u1, u2, a, b, alpha, w):
    wf = GridFunction(SMALL, w)
    lhs = environment(GridFunction(SMALL, a * u1 + b * u2), alpha, wf).values
    rhs = a * environment(GridFunction(SMALL, u1), alpha, wf).values + b * environment(
        GridFunction(SMALL, u2), alpha, wf
    ).values
    assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(densities, st.floats(0, 0.999), weights)
def test_environment_monotone_and_endpoints(u, alpha, w):
    uf, wf = GridFunction(SMALL, u), GridFunction(SMALL, w)
    Q = environment(uf, alpha, wf).values
    total = integrate(uf * wf, 0, SMALL.m)
    assert np.all(np.diff(Q) <= 1e-12 * (1 + total))
    assert Q[0] == pytest.approx(total, rel=1e-12, abs=1e-12)
    assert Q[-1] == pytest.approx(alpha * total, rel=1e-12, abs=1e-12)


def test_parallel_map_preserves_order():
    assert parallel_map(lambda x: x * x, range(20), max_workers=4) == [x * x for x in range(20)]
    assert parallel_map(lambda x: x + 1, [1], max_workers=4) == [2]
