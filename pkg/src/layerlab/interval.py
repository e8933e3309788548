"""Time integration on [0, 1]: the full eps > 0 system and the outer problems.

Density update (both solvers): conservative fluxes ``F = u_x - u_bar v_x`` with
zero flux at the walls, Crank-Nicolson diffusion and a Heun predictor-corrector
on the explicit chemotaxis part. Oxygen in the full system is advanced by Strang
splitting (half reaction, Crank-Nicolson diffusion with Dirichlet walls, half
reaction); in the outer problem by the exponential update
``v <- v exp(-dt (u_old + u_new) / 2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _march
from ._kernels import deriv_coefficients
from .grids import IntervalGrid
from .model import InitialData, ModelParams, antiderivative_transform

__all__ = [
    "SolverError",
    "ResolutionWarning",
    "TimeStepper",
    "StateUV",
    "Trajectory",
    "OuterProfiles",
    "make_stepper",
    "solve_full",
    "solve_outer0",
    "solve_outer1",
    "exponential_identity_residual",
]

NEG_TOL = 1e-12
_STATUS_TEXT = {
    _march.NONFINITE: "nonfinite values",
    _march.NEGATIVE_DENSITY: "negative density beyond tolerance",
    _march.BRACKET: "layer profile left its bracket",
}


class SolverError(RuntimeError):
    """Numerical abort; carries the failing step index and time."""

    def __init__(self, what, status, step, dt, context=""):
        self.status = int(status)
        self.step = int(step)
        self.time = step * dt
        msg = f"{what}: {_STATUS_TEXT.get(self.status, 'failure')} at step {self.step} (t={self.time:.6g})"
        if context:
            msg += f" [{context}]"
        super().__init__(msg)


class ResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TimeStepper:
    """Uniform step with ``steps_per_output`` steps between consecutive outputs."""

    dt: float
    steps_per_output: int
    n_out: int
    safety: float = 0.4
    scheme: str = "CN diffusion + Heun flux; Strang oxygen"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.steps_per_output < 1 or self.n_out < 1:
            raise ValueError("need at least one step and one output interval")

    @property
    def n_steps(self) -> int:
        return self.n_out * self.steps_per_output

    @property
    def T(self) -> float:
        return self.dt * self.n_steps

    @property
    def output_times(self) -> np.ndarray:
        return np.arange(self.n_out + 1) * (self.dt * self.steps_per_output)

    @property
    def step_times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def make_stepper(grid: IntervalGrid, T: float, v0=None, n_out: int = 20, safety: float = 0.4,
                 min_steps: int = 2000, dt: float | None = None) -> TimeStepper:
    """Pick ``dt`` and round it down so that ``n_out`` outputs land exactly on ``T``.

    Default: ``dt = min(safety dx_min^2, dx_min / max|v0_x|, T / min_steps)``.
    """
    if dt is None:
        dx = float(grid.spacing.min())
        dt = min(safety * dx * dx, T / min_steps)
        if v0 is not None:
            vx = np.abs(np.diff(v0) / grid.spacing).max()
            if vx > 0:
                dt = min(dt, dx / vx)
    spo = max(1, math.ceil(T / (n_out * dt) - 1e-9))
    return TimeStepper(T / (n_out * spo), spo, n_out, safety)


@dataclass(frozen=True)
class StateUV:
    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass
class Trajectory:
    """Output of :func:`solve_full`; rows of ``u``/``v`` are output times."""

    grid: IntervalGrid
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    epsilon: float
    v_star: float
    stepper: TimeStepper
    mass: float
    mass_drift: float
    u_min: float
    v_min: float
    v_max: float

    @property
    def relative_mass_drift(self) -> float:
        return self.mass_drift / self.mass if self.mass > 0 else self.mass_drift

    def state(self, j: int) -> StateUV:
        return StateUV(float(self.times[j]), self.u[j], self.v[j])

    def __iter__(self):
        return (self.state(j) for j in range(len(self.times)))

    def phi(self) -> np.ndarray:
        return antiderivative_transform(self.u, self.mass, self.grid)

    def columns(self) -> tuple[list, np.ndarray]:
        """Long-format (t, x, u, v) table."""
        nt, nx = self.u.shape
        table = np.column_stack([
            np.repeat(self.times, nx), np.tile(self.grid.nodes, nt), self.u.ravel(), self.v.ravel(),
        ])
        return ["t", "x", "u", "v"], table


@dataclass
class OuterProfiles:
    """Outer fields at the output times plus wall traces at every step.

    ``traces`` maps names from ``layerlab._march.TRACE_ROWS`` to arrays on
    ``step_times``; ``u_integral`` is the running trapezoid of ``int_0^t u``.
    """

    grid: IntervalGrid
    stepper: TimeStepper
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    v_initial: np.ndarray
    u_integral: np.ndarray
    traces: dict
    mass: float
    mass_drift: float
    u_min: float
    v_star: float
    phi1: np.ndarray | None = None
    v1: np.ndarray | None = None
    boundary_data: tuple | None = field(default=None, repr=False)

    @property
    def step_times(self) -> np.ndarray:
        return self.stepper.step_times

    @property
    def has_first_order(self) -> bool:
        return self.phi1 is not None

    @property
    def relative_mass_drift(self) -> float:
        return self.mass_drift / self.mass if self.mass > 0 else self.mass_drift

    def wall_traces(self, side: str) -> dict:
        """Coefficients seen by the layer at ``side``, on the step mesh.

        ``a`` = u^{I,0}, ``b`` = v^{I,0}, ``vx`` = v_x^{I,0}, ``phixx`` = phi_xx^{I,0},
        ``phi1x`` = phi_x^{I,1}, ``v1`` = v^{I,1}, all at the wall.
        """
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        tr = self.traces
        return {
            "a": tr[f"u_{side}"],
            "b": tr[f"v_{side}"],
            "vx": tr[f"vx_{side}"],
            "phixx": tr[f"ux_{side}"],
            "phi1x": tr[f"phi1x_{side}"],
            "v1": tr[f"v1_{side}"],
        }


def _check_guard(grid, epsilon, strict):
    limit = math.sqrt(epsilon) / 8.0
    if grid.dx_max > limit * (1 + 1e-12):
        msg = f"dx_max={grid.dx_max:.3e} exceeds sqrt(eps)/8={limit:.3e}; the layer is under-resolved"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, ResolutionWarning, stacklevel=3)


def solve_full(params: ModelParams, data: InitialData, stepper: TimeStepper,
               strict_resolution: bool = False) -> Trajectory:
    """Integrate the full system with diffusivity ``params.epsilon > 0``."""
    eps = params.epsilon
    if eps <= 0.0:
        raise ValueError("solve_full needs epsilon > 0; use solve_outer0 for the zero-diffusion problem")
    grid = data.grid
    _check_guard(grid, eps, strict_resolution)
    v0 = data.v0.copy()
    v0[0] = params.v_star
    v0[-1] = params.v_star
    res = _march.march_full(grid.spacing, grid.weights, data.u0.astype(float), v0, float(eps),
                            float(params.v_star), stepper.dt, stepper.n_out, stepper.steps_per_output, NEG_TOL)
    u_out, v_out, mass0, drift, umin, vmin, vmax, status, fail = res
    if status != _march.OK:
        raise SolverError("solve_full", status, fail, stepper.dt, f"eps={eps:g}")
    return Trajectory(grid, stepper.output_times, u_out, v_out, eps, params.v_star, stepper,
                      float(mass0), float(drift), float(umin), float(vmin), float(vmax))


def _run_outer(data, stepper, first_order, g0, g1, what):
    grid = data.grid
    cm, c0, cp, e0, e1 = deriv_coefficients(grid.nodes)
    res = _march.march_outer(grid.spacing, grid.weights, cm, c0, cp, e0, e1, data.u0.astype(float),
                             data.v0.astype(float), stepper.dt, stepper.n_out, stepper.steps_per_output,
                             NEG_TOL, first_order, g0, g1)
    u_out, v_out, p1_out, v1_out, iu_out, tr, mass0, drift, umin, status, fail = res
    if status != _march.OK:
        raise SolverError(what, status, fail, stepper.dt)
    traces = {name: tr[k] for k, name in enumerate(_march.TRACE_ROWS)}
    return u_out, v_out, p1_out, v1_out, iu_out, traces, float(mass0), float(drift), float(umin)


def solve_outer0(params: ModelParams, data: InitialData, stepper: TimeStepper) -> OuterProfiles:
    """Leading outer (zero-diffusion) problem; ``params.epsilon`` is ignored."""
    n_steps = stepper.n_steps + 1
    zero = np.zeros(n_steps)
    u, v, _, _, iu, traces, mass0, drift, umin = _run_outer(data, stepper, False, zero, zero, "solve_outer0")
    phi = antiderivative_transform(u, mass0, data.grid)
    return OuterProfiles(data.grid, stepper, stepper.output_times, u, v, phi, data.v0.copy(), iu,
                         traces, mass0, drift, umin, params.v_star)


def _on_step_mesh(times, values, step_times, label):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError(f"{label}: times and values differ in length")
    span = step_times[-1]
    if abs(times[0]) > 1e-12 * max(1.0, span) or abs(times[-1] - span) > 1e-9 * max(1.0, span):
        raise ValueError(f"{label}: trace covers [{times[0]:.6g}, {times[-1]:.6g}], outer mesh [0, {span:.6g}]")
    if times.shape == step_times.shape and np.allclose(times, step_times, rtol=0, atol=1e-12 * span):
        return values.copy()
    return np.interp(step_times, times, values)


def solve_outer1(outer0: OuterProfiles, data: InitialData, left_trace, right_trace) -> OuterProfiles:
    """First-order outer pair, marched in lockstep with a re-run of the leading problem.

    ``left_trace``/``right_trace`` are ``(times, values)`` of phi^{B,1}(0, t) and
    phi^{b,1}(0, t); the Dirichlet data are their negatives. Traces on a coarser
    time mesh are interpolated linearly onto the outer step mesh.
    """
    stepper = outer0.stepper
    st = stepper.step_times
    g0 = -_on_step_mesh(*left_trace, st, "left layer trace")
    g1 = -_on_step_mesh(*right_trace, st, "right layer trace")
    u, v, p1, v1, iu, traces, mass0, drift, umin = _run_outer(data, stepper, True, g0, g1, "solve_outer1")
    phi = antiderivative_transform(u, mass0, data.grid)
    return OuterProfiles(data.grid, stepper, stepper.output_times, u, v, phi, data.v0.copy(), iu,
                         traces, mass0, drift, umin, outer0.v_star, p1, v1, (g0, g1))


def exponential_identity_residual(outer: OuterProfiles) -> float:
    """``max |v^{I,0} - v_0 exp(-int_0^t u^{I,0})|`` over nodes and output times."""
    pred = outer.v_initial[None, :] * np.exp(-outer.u_integral)
    return float(np.abs(outer.v - pred).max())
