import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncphi4.quadrature import (
    RadialGrid,
    SampledFunction,
    build_grid,
    hilbert,
    hilbert_at_nodes,
    integrate,
    interpolate,
)
from oracles import truncated_hilbert_free


def sampled(grid, fn, **kw):
    return SampledFunction(grid, fn(grid.nodes), **kw)


def test_uniform_grid_nodes():
    g = build_grid(16, 1.0, "uniform")
    assert np.allclose(g.nodes, np.arange(1, 17) / 16, rtol=0, atol=1e-15)
    assert g.scheme == "uniform"


def test_log_grid_nodes():
    g = build_grid(100, 1e4, "log_uniform")
    assert g.nodes[0] == pytest.approx(1e-4, rel=1e-12)
    assert g.nodes[-1] == 1e4
    ratios = g.nodes[1:] / g.nodes[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


@pytest.mark.parametrize("n", [16, 17, 100, 2000])
@pytest.mark.parametrize("cutoff", [1.0, 1e4, 4e4])
@pytest.mark.parametrize("scheme", ["uniform", "log_uniform"])
def test_grid_invariants(n, cutoff, scheme):
    g = build_grid(n, cutoff, scheme)
    assert np.all(g.weights > 0)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] > 0 and g.nodes[-1] == cutoff
    assert abs(g.weights.sum() - cutoff) <= 1e-10 * cutoff


def test_grid_validation():
    with pytest.raises(ValueError):
        build_grid(8, 1.0)
    with pytest.raises(ValueError):
        build_grid(100, -1.0)
    with pytest.raises(ValueError):
        build_grid(100, 1.0, "chebyshev")
    with pytest.raises(ValueError):
        RadialGrid(np.array([0.5, 0.4, 1.0]), np.ones(3), 1.0, "uniform")


def test_integrate_examples():
    grid = build_grid(2000, 1e4)
    assert integrate(lambda p: np.ones_like(p), 0, 1e4, grid) == pytest.approx(1e4, rel=1e-12)
    assert integrate(lambda p: p, 0.0, 1.0) == pytest.approx(0.5, abs=1e-10)
    assert integrate(lambda p: (1 + p) ** -2.0, 0.0, 10.0) == pytest.approx(10 / 11, abs=1e-8)


def test_integrate_sampled_function():
    grid = build_grid(400, 10.0)
    f = sampled(grid, lambda p: 1 / (1 + p) ** 2, value_at_zero=1.0)
    assert integrate(f, 0.0, 10.0) == pytest.approx(10 / 11, rel=1e-6)
    assert integrate(f, 3.0, 3.0) == 0.0
    with pytest.raises(ValueError):
        integrate(f, 2.0, 1.0)


def test_interpolate_exact_at_nodes():
    grid = build_grid(200, 1e4)
    f = sampled(grid, lambda a: 1 / (1 + a), value_at_zero=1.0)
    for k in (0, 17, 100, 199):
        assert interpolate(f, grid.nodes[k]) == f.values[k]


def test_interpolate_analytic_oracle():
    grid = build_grid(200, 1e4)
    f = sampled(grid, lambda a: 1 / (1 + a), value_at_zero=1.0)
    assert interpolate(f, 0.3) == pytest.approx(1 / 1.3, abs=1e-6)


def test_interpolate_is_monotone_for_monotone_data():
    grid = build_grid(40, 100.0, "uniform")
    steps = np.where(grid.nodes < 50, 1.0, 0.0) + np.exp(-grid.nodes)
    f = SampledFunction(grid, steps, value_at_zero=2.0)
    x = np.linspace(0, 100, 5001)
    y = f(x)
    assert np.all(np.diff(y) <= 1e-15)
    assert y.max() <= 2.0 and y.min() >= steps.min()


def test_interpolate_tail_and_errors():
    grid = build_grid(100, 10.0)
    f = sampled(grid, lambda a: 1 / (1 + a), tail_exponent=-1.0, value_at_zero=1.0)
    assert f(40.0) == pytest.approx(f.values[-1] / 4)
    with pytest.raises(ValueError):
        f(-1.0)
    with pytest.raises(ValueError):
        SampledFunction(grid, np.full(grid.n, np.nan))
    with pytest.raises(ValueError):
        SampledFunction(grid, np.ones(3))


@pytest.mark.parametrize("a", [1e-3, 0.37, 1.0, 42.0, 5e3, 9999.0])
def test_hilbert_constant(a):
    grid = build_grid(300, 1e4)
    one = sampled(grid, np.ones_like)
    assert hilbert(one, a) == pytest.approx(math.log((1e4 - a) / a) / math.pi, rel=1e-12, abs=1e-14)


def test_hilbert_constant_midpoint_vanishes():
    grid = build_grid(64, 2.0, "uniform")
    one = sampled(grid, np.ones_like)
    assert abs(hilbert(one, 1.0)) < 1e-14


def test_hilbert_linear():
    grid = build_grid(400, 1.0, "uniform")
    f = sampled(grid, lambda p: p, value_at_zero=0.0)
    assert hilbert(f, 0.25) == pytest.approx((1 + 0.25 * math.log(3)) / math.pi, abs=1e-8)


def test_hilbert_at_node_uses_removable_limit():
    grid = build_grid(2000, 1e4)
    f = sampled(grid, lambda p: 1 / (1 + p), value_at_zero=1.0)
    a = grid.nodes[1234]
    assert hilbert(f, a) == pytest.approx(truncated_hilbert_free(a, 1e4), abs=1e-8)
    assert f.derivative(a) == pytest.approx(-1 / (1 + a) ** 2, rel=1e-8)
    assert f.derivative(np.array([a, a])).shape == (2,)


def test_hilbert_at_nodes_matches_pointwise_and_diverges_at_cutoff():
    grid = build_grid(300, 1e3)
    f = sampled(grid, lambda p: 1 / (1 + p), value_at_zero=1.0)
    h = hilbert_at_nodes(f)
    assert h[-1] == -np.inf
    idx = [0, 10, 150, 298]
    assert np.allclose(h[idx], hilbert(f, grid.nodes[idx]), rtol=1e-12, atol=1e-14)
    oracle = np.array([truncated_hilbert_free(a, 1e3) for a in grid.nodes[:-1]])
    assert np.max(np.abs(h[:-1] - oracle)) < 1e-5


def test_hilbert_at_zero_requires_vanishing_function():
    grid = build_grid(200, 10.0)
    f = sampled(grid, np.ones_like)
    with pytest.raises(ValueError):
        hilbert(f, 0.0)
    vanishing = sampled(grid, lambda p: p / (1 + p), value_at_zero=0.0)
    exact = (math.log(11.0)) / math.pi
    assert hilbert(vanishing, 0.0) == pytest.approx(exact, rel=1e-5)


def test_hilbert_domain():
    grid = build_grid(100, 10.0)
    f = sampled(grid, np.ones_like)
    with pytest.raises(ValueError):
        hilbert(f, 10.0)
    with pytest.raises(ValueError):
        hilbert(f, -0.5)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1e-3, 900.0))
def test_hilbert_linearity(alpha, beta, a):
    grid = build_grid(200, 1e3)
    f = sampled(grid, lambda p: 1 / (1 + p), value_at_zero=1.0)
    g = sampled(grid, lambda p: np.exp(-p / 10), value_at_zero=1.0)
    comb = f.with_values(alpha * f.values + beta * g.values, value_at_zero=alpha + beta)
    lhs = hilbert(comb, a)
    rhs = alpha * hilbert(f, a) + beta * hilbert(g, a)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(hilbert(f, a)) + abs(hilbert(g, a)))


@given(st.floats(-5, 5), st.floats(1e-3, 900.0))
def test_hilbert_subtraction_term_vanishes_for_constants(c, a):
    # for f constant the subtracted integrand f(p) - f(a) is identically zero,
    # so only the logarithmic term survives (up to rounding in the stencil weights)
    grid = build_grid(150, 1e3)
    f = SampledFunction(grid, np.full(grid.n, c))
    assert hilbert(f, a) == pytest.approx(c * math.log((1e3 - a) / a) / math.pi, rel=1e-11, abs=1e-13)


def test_hilbert_grid_refinement_order():
    lam2 = 1e4
    exact = truncated_hilbert_free(1.0, lam2)
    ns = [250, 500, 1000, 2000]
    errs = []
    for n in ns:
        grid = build_grid(n, lam2)
        f = sampled(grid, lambda p: 1 / (1 + p), value_at_zero=1.0)
        errs.append(abs(hilbert(f, 1.0) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 2.0), (errs, orders)
