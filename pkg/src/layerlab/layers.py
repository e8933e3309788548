"""Boundary-layer profiles on the truncated half-line.

Both walls share one solver. The left layer lives in ``z = x / sqrt(eps)``; the
right layer is stored in the reflected variable ``s = (1 - x) / sqrt(eps)``, so
``v^{b,0}(s)`` obeys the same equation as ``v^{B,0}(z)`` with the right-wall
outer traces, while potential-type fields change sign under the reflection:

    phi^{B,1}(z) = -a_L int_z^inf (e^{v^{B,0}} - 1),
    phi^{b,1}(s) = +a_R int_s^inf (e^{v^{b,0}} - 1).

Here ``a = u^{I,0}`` and ``b = v^{I,0}`` at the wall. The second-order pair is
obtained from the reduced equation for ``v^{B,1}`` (decay rate ``kappa``, a
source built from the lower profiles and a nonlocal tail term) and the
representation of ``phi_z^{B,2}`` through tail integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _march
from .grids import HalfLineGrid, QuadratureRule, integrate_tail, make_halfline_grid, tail_integral
from .interval import OuterProfiles, SolverError

__all__ = [
    "LayerProfiles",
    "layer_stride",
    "solve_layer_v0",
    "compute_phi1_layer",
    "compute_u_layer",
    "solve_layer_order2",
    "mirror_mismatch",
]

BRACKET_SLACK = 1e-10
LAYER_STEPS_PER_OUTPUT = 200
_SIGN = {"left": -1.0, "right": 1.0}


@dataclass
class LayerProfiles:
    """Layer fields at the output times (rows) on ``grid.nodes`` (columns).

    Potential fields are stored with the sign convention of their wall; see the
    module docstring. ``phi1_trace`` is phi^{B,1}(0, t) (or phi^{b,1}) on the
    finer layer time mesh ``step_times``.
    """

    side: str
    grid: HalfLineGrid
    v_star: float
    times: np.ndarray
    step_times: np.ndarray
    coeffs: dict  # wall coefficients on step_times
    v0: np.ndarray
    phi1: np.ndarray
    u: np.ndarray
    phi1_trace: np.ndarray
    v_min: float
    v_max: float
    stride: int = 1  # outer steps per layer step
    v1: np.ndarray | None = None
    phi2: np.ndarray | None = None

    @property
    def has_order2(self) -> bool:
        return self.v1 is not None

    @property
    def steps_per_output(self) -> int:
        return (len(self.step_times) - 1) // (len(self.times) - 1)

    def at_outputs(self, name: str) -> np.ndarray:
        return self.coeffs[name][:: self.steps_per_output]

    def boundary_traces(self) -> dict:
        out = {"v0": self.v0[:, 0], "phi1": self.phi1[:, 0], "u": self.u[:, 0]}
        if self.has_order2:
            out["v1"] = self.v1[:, 0]
            out["phi2"] = self.phi2[:, 0]
        return out

    def columns(self) -> tuple[list, np.ndarray]:
        """Long-format (t, z, field...) table."""
        names = ["v0", "phi1", "u"] + (["v1", "phi2"] if self.has_order2 else [])
        nt, nz = self.v0.shape
        cols = [np.repeat(self.times, nz), np.tile(self.grid.nodes, nt)]
        cols += [getattr(self, k).ravel() for k in names]
        return ["t", "z" if self.side == "left" else "s"] + names, np.column_stack(cols)


def layer_stride(steps_per_output: int, target: int = LAYER_STEPS_PER_OUTPUT) -> int:
    """Outer steps per layer step: the layer takes the smallest divisor of
    ``steps_per_output`` that is at least ``target`` as its own steps per output."""
    if steps_per_output <= target:
        return 1
    for d in range(target, steps_per_output + 1):
        if steps_per_output % d == 0:
            return steps_per_output // d
    return 1


def _wall_coefficients(side, outer: OuterProfiles, stride: int) -> dict:
    tr = outer.wall_traces(side)
    c = {k: np.ascontiguousarray(val[::stride]) for k, val in tr.items()}
    if side == "right":
        # reflection s = (1 - x)/sqrt(eps) flips odd x-derivatives
        c["phixx"] = -c["phixx"]
        c["vx"] = -c["vx"]
    return c


def _check_side(side):
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def compute_phi1_layer(side: str, v0_layer, a, grid: HalfLineGrid, rule: QuadratureRule | None = None):
    """First-order layer potential from the closed-form tail integral.

    ``v0_layer`` has time along the first axis and ``a`` (the wall value of
    u^{I,0}) one entry per row.
    """
    _check_side(side)
    v0_layer = np.atleast_2d(v0_layer)
    a = np.broadcast_to(np.asarray(a, dtype=float), (v0_layer.shape[0],))
    dens = np.expm1(v0_layer)
    if rule is None or rule.kind == "trapezoid":
        tails = tail_integral(dens, grid.dz)
    else:
        tails = np.array([[integrate_tail(row, zj, grid, rule) for zj in grid.nodes] for row in dens])
    return _SIGN[side] * a[:, None] * tails


def compute_u_layer(side: str, v0_layer, a):
    """Leading layer density ``a (e^{v0} - 1)``; identical in form at both walls."""
    _check_side(side)
    v0_layer = np.atleast_2d(v0_layer)
    a = np.broadcast_to(np.asarray(a, dtype=float), (v0_layer.shape[0],))
    return a[:, None] * np.expm1(v0_layer)


def _run_layer(side, outer, grid, stride, order2):
    st = outer.stepper
    c = _wall_coefficients(side, outer, stride)
    n_out = st.n_out
    spo = st.steps_per_output // stride
    dt = st.dt * stride
    zeros = np.zeros_like(c["a"])
    if order2:
        q, r, sx, vi1 = c["phixx"], c["phi1x"], c["vx"], c["v1"]
    else:
        q = r = sx = vi1 = zeros
    res = _march.march_layer(grid.nodes, c["a"], c["b"], float(outer.v_star), dt, n_out, spo, order2,
                             q, r, sx, vi1, BRACKET_SLACK)
    v0_out, v1_out, phi1_trace, vmin, vmax, status, fail = res
    if status != _march.OK:
        raise SolverError(f"layer ({side})", status, fail, dt)
    step_times = np.arange(n_out * spo + 1) * dt
    return c, step_times, v0_out, v1_out, phi1_trace, vmin, vmax


def solve_layer_v0(side: str, outer: OuterProfiles, grid: HalfLineGrid | None = None,
                   stride: int | None = None) -> LayerProfiles:
    """Leading layer profile plus its closed-form companions phi1 and u.

    The layer takes every ``stride``-th outer step as its own time mesh, so the
    wall coefficients are read off without interpolation.
    """
    _check_side(side)
    grid = grid or make_halfline_grid(orientation=side)
    if grid.orientation != side:
        grid = grid.reflected()
    stride = stride or layer_stride(outer.stepper.steps_per_output)
    if outer.stepper.steps_per_output % stride:
        raise ValueError("layer stride must divide the outer steps per output")
    c, step_times, v0_out, _, phi1_trace, vmin, vmax = _run_layer(side, outer, grid, stride, False)
    a_out = c["a"][:: outer.stepper.steps_per_output // stride]
    phi1 = compute_phi1_layer(side, v0_out, a_out, grid)
    u = compute_u_layer(side, v0_out, a_out)
    # the march records the left-wall convention
    trace = phi1_trace if side == "left" else -phi1_trace
    return LayerProfiles(side, grid, float(outer.v_star), outer.times.copy(), step_times, c, v0_out, phi1, u,
                         trace, float(vmin), float(vmax), stride)


def _phi2(grid, v0, v1, a, b, q, r, sx, vi1):
    z = grid.nodes
    dz = grid.dz
    kappa, source, kern, tail = _march.layer_order2_terms(z, dz, v0, v1, a, b, q, r, sx, vi1)
    ev = np.exp(v0)
    p = a * ev
    dphi2 = -ev * tail + ev * tail_integral(v1 * kern, dz) + v1 * p
    return -tail_integral(dphi2, dz)


def solve_layer_order2(side: str, layer: LayerProfiles, outer1: OuterProfiles) -> LayerProfiles:
    """Second-order layer pair (v1, phi2) for ``layer``, driven by the first-order outer traces.

    ``outer1`` must come from :func:`layerlab.interval.solve_outer1`. The leading
    profile is re-marched alongside on the same time mesh, so ``layer.v0`` is
    reproduced exactly.
    """
    _check_side(side)
    if not outer1.has_first_order:
        raise ValueError("solve_layer_order2 needs outer profiles with the first-order pair")
    if side != layer.side:
        raise ValueError(f"layer is for the {layer.side} wall, asked for {side}")
    c, step_times, v0_out, v1_out, _, vmin, vmax = _run_layer(side, outer1, layer.grid, layer.stride, True)
    if step_times.shape != layer.step_times.shape:
        raise ValueError("time mesh of outer1 differs from the one the layer was solved on")
    every = layer.steps_per_output
    phi2 = np.empty_like(v0_out)
    for j in range(v0_out.shape[0]):
        i = j * every
        phi2[j] = _phi2(layer.grid, v0_out[j], v1_out[j], c["a"][i], c["b"][i], c["phixx"][i],
                        c["phi1x"][i], c["vx"][i], c["v1"][i])
    if side == "right":
        phi2 = -phi2
    return replace(layer, coeffs=c, v0=v0_out, v1=v1_out, phi2=phi2, v_min=min(layer.v_min, vmin),
                   v_max=max(layer.v_max, vmax))


def mirror_mismatch(left: LayerProfiles, right: LayerProfiles) -> dict:
    """Max differences between left and reflected right profiles (v equal, phi opposite)."""
    out = {
        "v0": float(np.abs(left.v0 - right.v0).max()),
        "phi1": float(np.abs(left.phi1 + right.phi1).max()),
        "u": float(np.abs(left.u - right.u).max()),
    }
    if left.has_order2 and right.has_order2:
        out["v1"] = float(np.abs(left.v1 - right.v1).max())
        out["phi2"] = float(np.abs(left.phi2 + right.phi2).max())
    return out
