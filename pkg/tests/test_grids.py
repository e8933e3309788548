import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerlab.grids import (
    GridError,
    QuadratureRule,
    integrate_tail,
    make_halfline_grid,
    make_interval_grid,
    tail_integral,
)


def test_uniform_partition_values():
    # n=4 is below the admissible minimum, so check the n=16 partition instead
    g = make_interval_grid(16)
    assert np.array_equal(g.nodes, np.arange(17) / 16)
    assert np.allclose(g.spacing, 1 / 16, rtol=0, atol=0)


def test_small_n_rejected():
    with pytest.raises(GridError):
        make_interval_grid(4)


def test_stretch_one_is_uniform():
    a = make_interval_grid(16)
    b = make_interval_grid(16, "tanh", 1.0)
    assert np.array_equal(a.nodes, b.nodes)


def test_tanh_first_spacing_matches_map():
    g = make_interval_grid(1024, "tanh", 3.0)
    k = math.atanh(1 - 1 / 3)
    x1 = 0.5 * (1 + math.tanh(k * (2 / 1024 - 1)) / math.tanh(k))
    assert g.spacing[0] == pytest.approx(x1, rel=1e-13)
    assert g.spacing.min() == pytest.approx(x1, rel=1e-13)
    assert g.spacing_ratio > 1
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0


def test_bad_grading_rejected():
    with pytest.raises(GridError):
        make_interval_grid(32, "tanh", 0.5)
    with pytest.raises(GridError):
        make_interval_grid(32, "cosine")


def test_halfline_spacing():
    assert make_halfline_grid(28, 64).dz == 0.4375
    assert make_halfline_grid(40, 4096).dz == 40 / 4096


def test_halfline_decay_budget():
    with pytest.raises(GridError):
        make_halfline_grid(27, 64)
    with pytest.raises(GridError):
        make_halfline_grid(32, 32)


def test_reflected_orientation():
    g = make_halfline_grid(32, 128)
    r = g.reflected()
    assert r.orientation == "right"
    assert np.array_equal(r.nodes, g.nodes)


def test_tail_of_zero():
    g = make_halfline_grid(28, 64)
    assert integrate_tail(np.zeros(65), 0.0, g) == 0.0


@pytest.mark.parametrize("kind", ["trapezoid", "simpson"])
def test_tail_of_exponential(kind):
    g = make_halfline_grid(28, 2048)
    val = integrate_tail(np.exp(-g.nodes), 0.0, g, QuadratureRule(kind))
    # rule errors: dz^2/12 for trapezoid, dz^4/180 for Simpson (dz = 28/2048)
    tol = 2e-5 if kind == "trapezoid" else 1e-9
    assert val == pytest.approx(1 - math.exp(-28), rel=tol)


def test_tail_of_z_exp():
    # int_1^inf z e^{-z} dz = 2/e
    g = make_halfline_grid(32, 4096)
    val = integrate_tail(g.nodes * np.exp(-g.nodes), 1.0, g)
    assert val == pytest.approx(2 / math.e, rel=1e-6)


def test_tail_outside_grid():
    g = make_halfline_grid(28, 64)
    with pytest.raises(GridError):
        integrate_tail(np.ones(65), 29.0, g)


def test_trapezoid_second_order():
    errs = []
    for m in (256, 512, 1024):
        g = make_halfline_grid(32, m)
        errs.append(abs(integrate_tail(np.exp(-g.nodes), 0.0, g) - (1 - math.exp(-32))))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_tail_integral_matches_scalar_version():
    g = make_halfline_grid(30, 300)
    f = np.exp(-0.7 * g.nodes) * np.cos(g.nodes)
    vec = tail_integral(f, g.dz)
    for j in (0, 5, 150, 300):
        assert vec[j] == pytest.approx(integrate_tail(f, g.nodes[j], g), abs=1e-15)
    both = tail_integral(np.stack([f, 2 * f]), g.dz)
    assert np.allclose(both[1], 2 * vec)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-1e3, 1e3), n=st.integers(16, 400))
def test_trapezoid_constant_exact(c, n):
    g = make_interval_grid(n)
    assert g.integrate(np.full(n + 1, c)) == pytest.approx(c, abs=1e-12 * max(1, abs(c)))
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(g.weights > 0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(16, 300), stretch=st.floats(1.0, 20.0))
def test_graded_grid_invariants(n, stretch):
    g = make_interval_grid(n, "tanh", stretch)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert np.all(np.diff(g.nodes) > 0)
    assert np.isfinite(g.spacing_ratio)


@settings(max_examples=40, deadline=None)
@given(z0=st.floats(0, 10), z1=st.floats(10, 20))
def test_tail_additive(z0, z1):
    g = make_halfline_grid(32, 512)
    f = np.exp(-g.nodes)
    a = integrate_tail(f, z0, g)
    b = integrate_tail(f, z1, g)
    # the piece [z0, z1] by trapezoid on the nodes inside plus interpolated end values
    inside = (g.nodes > z0) & (g.nodes < z1)
    zz = np.concatenate([[z0], g.nodes[inside], [z1]])
    ff = np.interp(zz, g.nodes, f)
    piece = float(np.sum(0.5 * np.diff(zz) * (ff[1:] + ff[:-1])))
    assert a == pytest.approx(b + piece, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(kind=st.sampled_from(["trapezoid", "simpson"]), m=st.integers(2, 200))
def test_quadrature_weights_sum_to_length(kind, m):
    nodes = np.linspace(0, 3.0, m + 1)
    w = QuadratureRule(kind).weights(nodes)
    assert w.sum() == pytest.approx(3.0, rel=1e-13)
