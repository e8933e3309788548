"""Outer/boundary-layer expansion toolkit for a 1-D chemotaxis system with small
oxygen diffusivity.

The system is ``u_t = u_xx - (u v_x)_x``, ``v_t = eps v_xx - u v`` on (0, 1) with
zero cell flux and ``v = v_star`` at both walls.
"""

from ._accel import BACKEND
from .analysis import SweepPlan, build_profiles, fit_rate, measure_thickness, run_sweep
from .expansion import assemble, build_correctors, compute_remainders
from .grids import make_halfline_grid, make_interval_grid
from .interval import make_stepper, solve_full, solve_outer0, solve_outer1
from .layers import compute_phi1_layer, compute_u_layer, solve_layer_order2, solve_layer_v0
from .model import (
    ModelParams,
    antiderivative_transform,
    build_initial_data,
    check_compatibility,
    inverse_transform,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ModelParams",
    "SweepPlan",
    "antiderivative_transform",
    "assemble",
    "build_correctors",
    "build_profiles",
    "build_initial_data",
    "check_compatibility",
    "compute_phi1_layer",
    "compute_remainders",
    "compute_u_layer",
    "fit_rate",
    "inverse_transform",
    "make_halfline_grid",
    "make_interval_grid",
    "make_stepper",
    "measure_thickness",
    "run_sweep",
    "solve_full",
    "solve_layer_order2",
    "solve_layer_v0",
    "solve_outer0",
    "solve_outer1",
]
