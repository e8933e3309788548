import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerlab.expansion import CorrectorPair, assemble, build_correctors, compute_remainders, sample_layer
from layerlab.grids import make_halfline_grid
from layerlab.layers import solve_layer_v0

EPS = 2.0**-6


def test_sample_layer_zero_past_truncation():
    g = make_halfline_grid()
    vals = np.exp(-g.nodes)
    out = sample_layer(vals, g, np.array([0.0, 1.0, g.z_max + 1]))
    assert out[0] == 1.0 and out[2] == 0.0
    assert out[1] == pytest.approx(math.exp(-1), rel=1e-4)
    two = sample_layer(np.stack([vals, 2 * vals]), g, np.array([0.5]))
    assert two.shape == (2, 1) and two[1, 0] == 2 * two[0, 0]


def test_corrector_is_affine():
    c = CorrectorPair(np.array([1.0]), np.array([3.0]), np.array([-2.0]), np.array([0.0]))
    x = np.linspace(0, 1, 5)
    assert np.allclose(c.b_phi(x)[0], 1 + 2 * x)
    assert np.allclose(c.b_v(x)[0], -2 * (1 - x))
    assert np.all(CorrectorPair.zeros(3).b_v(x) == 0)


def test_full_assembly_hits_wall_values(profiles):
    ps = profiles
    app = assemble("full", ps.outer, ps.left, ps.right, EPS)
    assert np.abs(app.v[:, 0] - 1.0).max() <= 1e-12
    assert np.abs(app.v[:, -1] - 1.0).max() <= 1e-12
    assert np.abs(app.phi[:, 0]).max() <= 1e-12
    assert np.abs(app.phi[:, -1]).max() <= 1e-12
    assert "b_v" in app.components


def test_order0_wall_value(profiles):
    ps = profiles
    app = assemble(0, ps.outer, ps.left, ps.right, EPS)
    # the far-wall tail of a layer is below the decay budget
    assert np.abs(app.v[:, 0] - 1.0).max() <= 1e-12
    assert np.array_equal(app.phi, ps.outer.phi)


def test_interior_probe_equals_outer():
    # at eps = 2^-12, x = 1/2 sits at z = s = 32 = z_max, where both layers are cut off
    from layerlab.analysis import build_profiles
    from layerlab.model import ModelParams

    eps = 2.0**-12
    ps = build_profiles(ModelParams(epsilon=eps, T=0.01), 64)
    j = 32
    for order in (0, 1):
        app = assemble(order, ps.outer, ps.left, ps.right, eps)
        assert np.array_equal(app.v[:, j], ps.outer.v[:, j])
        assert np.array_equal(app.u[:, j], ps.outer.u[:, j])
    app = assemble(1, ps.outer, ps.left, ps.right, eps)
    assert np.allclose(app.phi[:, j], ps.outer.phi[:, j] + math.sqrt(eps) * ps.outer.phi1[:, j], rtol=1e-15,
                       atol=1e-30)


def test_order1_adds_first_order_potential(profiles):
    ps = profiles
    a0 = assemble(0, ps.outer, ps.left, ps.right, EPS)
    a1 = assemble(1, ps.outer, ps.left, ps.right, EPS)
    assert np.array_equal(a0.v, a1.v) and np.array_equal(a0.u, a1.u)
    diff = a1.phi - a0.phi
    assert np.abs(diff[:, 0]).max() <= 1e-12 * max(1e-300, np.abs(diff).max())


def test_self_comparison_is_zero(profiles):
    ps = profiles
    app = assemble("full", ps.outer, ps.left, ps.right, EPS)
    r = compute_remainders(app, app)
    assert r.E_u == r.E_v == r.E_phi == r.E_phix == 0.0
    assert set(r.per_time) == {"E_u", "E_v", "E_phi", "E_phix"}


def test_zero_wall_value_collapses_to_outer(profiles_vstar0):
    ps = profiles_vstar0
    app = assemble("full", ps.outer, ps.left, ps.right, EPS)
    assert np.abs(app.u - ps.outer.u).max() <= 1e-12
    assert np.abs(app.v - ps.outer.v).max() <= 1e-12
    assert np.abs(app.phi - ps.outer.phi).max() <= 1e-12


def test_correctors_cancel_far_wall_tails(profiles):
    ps = profiles
    c = build_correctors(ps.left, ps.right, EPS)
    far = 1 / math.sqrt(EPS)
    tail = sample_layer(ps.left.v0, ps.left.grid, np.array([far]))[:, 0]
    tail1 = sample_layer(ps.left.v1, ps.left.grid, np.array([far]))[:, 0]
    assert np.array_equal(c.v_right, -(tail + math.sqrt(EPS) * tail1))
    assert c.v_left.shape == ps.outer.times.shape
    with pytest.raises(ValueError):
        build_correctors(ps.left, ps.right, 0.0)


def test_assembly_errors(profiles):
    ps = profiles
    with pytest.raises(ValueError):
        assemble(2, ps.outer, ps.left, ps.right, EPS)
    with pytest.raises(ValueError):
        assemble(0, ps.outer, ps.right, ps.left, EPS)
    with pytest.raises(ValueError):
        assemble(1, ps.outer0, ps.left, ps.right, EPS)
    first = solve_layer_v0("left", ps.outer0, ps.left.grid)
    with pytest.raises(ValueError):
        assemble("full", ps.outer, first, ps.right, EPS)
    with pytest.raises(ValueError):
        assemble(0, ps.outer, ps.left, ps.right, 0.0)


def test_remainders_shape_mismatch(profiles):
    ps = profiles
    app = assemble(0, ps.outer, ps.left, ps.right, EPS)
    other = assemble(0, ps.outer, ps.left, ps.right, EPS)
    other.times = other.times * 2
    with pytest.raises(ValueError):
        compute_remainders(other, app)


def test_columns(profiles):
    ps = profiles
    names, table = assemble(0, ps.outer, ps.left, ps.right, EPS).columns()
    assert names == ["t", "x", "u_app", "v_app", "phi_app"]
    assert table.shape == (ps.outer.u.size, 5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_corrector_wall_values(left, right):
    c = CorrectorPair(np.array([left]), np.array([right]), np.array([right]), np.array([left]))
    b = c.b_phi(np.array([0.0, 1.0]))[0]
    assert b[0] == left and b[1] == right
    bv = c.b_v(np.array([0.0, 1.0]))[0]
    assert bv[0] == right and bv[1] == left
