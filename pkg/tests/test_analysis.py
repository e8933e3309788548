import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerlab.analysis import (
    ConvergenceReport,
    RunArtifacts,
    SweepPlan,
    boundary_value_check,
    fit_rate,
    interior_check,
    invariant_battery,
    measure_thickness,
    run_sweep,
)
from layerlab.expansion import assemble
from layerlab.interval import solve_full

EPS = 2.0**-6


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 3), st.floats(-5, 5), st.integers(3, 9))
def test_fit_recovers_exact_power_law(p, logc, k):
    eps = 2.0 ** -np.arange(6, 6 + k)
    fit = fit_rate(eps, math.exp(logc) * eps**p)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.intercept == pytest.approx(logc, abs=1e-8)
    assert fit.r2 == pytest.approx(1.0, abs=1e-9) or p == pytest.approx(0.0, abs=1e-12)
    assert fit.points == k


def test_fit_drops_bad_values_and_needs_three():
    eps = [1e-1, 1e-2, 1e-3, 1e-4]
    with pytest.warns(RuntimeWarning):
        fit = fit_rate(eps, [1e-1, None, 1e-3, 1e-4])
    assert fit.points == 3 and fit.slope == pytest.approx(1.0)
    with pytest.raises(ValueError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit_rate(eps, [1.0, 0.0, -1.0, 2.0])


def test_fit_r2_below_one_for_noisy_data():
    eps = 2.0 ** -np.arange(6, 12)
    err = eps**0.5 * np.array([1, 2, 1, 2, 1, 2])
    assert fit_rate(eps, err).r2 < 0.99


@pytest.mark.parametrize("eps", [2.0**-8, 2.0**-12])
def test_thickness_of_synthetic_layer(eps):
    # v = v_outer + A exp(-x/sqrt(eps)) at both walls: thickness sqrt(eps) ln 10
    x = np.linspace(0, 1, 4097)
    vo = 0.3 + x**2
    se = math.sqrt(eps)
    vf = vo + 0.7 * (np.exp(-x / se) + np.exp(-(1 - x) / se))
    left, right = measure_thickness(vf, vo, x, eps, 0.1)
    exact = se * math.log(10)
    # the far-wall tail adds a relative perturbation of order exp(-1/sqrt(eps))
    tol = 1e-9 + 10 * math.exp(-1 / se) / 0.1
    assert left == pytest.approx(exact, rel=tol)
    assert right == pytest.approx(exact, rel=tol)


def test_thickness_absent_without_layer():
    x = np.linspace(0, 1, 65)
    vo = 1 + x
    assert measure_thickness(vo + 1e-13, vo, x) == (None, None)
    with pytest.raises(ValueError):
        measure_thickness(vo, vo, x, threshold=1.5)


def test_boundary_check_zero_for_exact_formula():
    a = np.linspace(0.1, 0.2, 5)
    b = np.linspace(0.9, 0.5, 5)
    res, fit = boundary_value_check([a * np.exp(1 - b)] * 3, [(a, b)] * 3, 1.0)
    assert np.all(res == 0.0) and fit is None


def test_boundary_check_fit():
    eps = np.array([1e-2, 1e-3, 1e-4])
    a = np.ones(3)
    b = np.ones(3)
    res, fit = boundary_value_check([a + e**0.5 for e in eps], [(a, b)] * 3, 1.0, eps)
    assert np.allclose(res, eps**0.5)
    assert fit.slope == pytest.approx(0.5)


def test_interior_check():
    x = np.linspace(0, 1, 101)
    bump = np.exp(-x / 0.01)
    out = interior_check(bump, 0 * x, 2 * bump, 0 * x, x, 0.25)
    assert out["full_u"] == 1.0 and out["full_v"] == 2.0
    assert out["interior_v"] == pytest.approx(2 * math.exp(-25))
    with pytest.raises(ValueError):
        interior_check(x, x, x, x, x, 0.5)


@pytest.fixture(scope="module")
def artifacts(params, profiles):
    ps = profiles
    traj = solve_full(params, ps.data, ps.stepper)
    return RunArtifacts(params, ps, traj, assemble("full", ps.outer, ps.left, ps.right, EPS))


def test_battery_passes_on_clean_run(artifacts):
    ledger = invariant_battery(artifacts)
    assert ledger and all(e.passed for e in ledger), [e for e in ledger if not e.passed]
    names = {e.name for e in ledger}
    assert {"mirror symmetry", "full maximum principle", "assembly V^A wall values"} <= names


def test_battery_flags_faults(artifacts):
    bad = {e.name for e in invariant_battery(artifacts, "flip_v_sign") if not e.passed}
    assert "full maximum principle" in bad
    bad = {e.name for e in invariant_battery(artifacts, "negative_u") if not e.passed}
    assert "outer0 positivity (-min u)" in bad
    with pytest.raises(ValueError):
        invariant_battery(artifacts, "nope")


def test_plan_resolution_rule():
    plan = SweepPlan()
    assert plan.cells_for(2.0**-6) == 64
    assert plan.cells_for(2.0**-14) == 1024
    assert 1 / plan.cells_for(2.0**-9) <= math.sqrt(2.0**-9) / 8
    with pytest.raises(ValueError):
        SweepPlan(epsilons=(2.0**-8, 2.0**-6))


def test_single_eps_sweep_has_no_slopes(tmp_path):
    plan = SweepPlan(epsilons=(EPS,), T=0.02)
    with pytest.warns(RuntimeWarning):
        rep = run_sweep(plan)
    assert isinstance(rep, ConvergenceReport)
    assert len(rep.rows) == 1 and all(f is None for f in rep.fits.values())
    assert rep.invariants_passed
    rep.write_csv(tmp_path / "r.csv")
    rep.write_json(tmp_path / "r.json")
    head = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert head == "epsilon,n,E_u,E_v,E_phi,thickness_left,thickness_right,boundary_residual"


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 10.0), st.integers(6, 14), st.floats(-1.0, 1.0))
def test_thickness_property(amp, k, offset):
    eps = 2.0**-k
    x = np.linspace(0, 1, 2**14 + 1)
    vo = 1.0 + offset * x
    vf = vo + amp * np.exp(-x / math.sqrt(eps))
    left, _ = measure_thickness(vf, vo, x, eps)
    assert left == pytest.approx(math.sqrt(eps) * math.log(10), rel=1e-9)
