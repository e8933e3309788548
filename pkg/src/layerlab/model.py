"""Model parameters, initial data and the anti-derivative change of unknowns.

The cell density ``u`` and the potential ``phi(x) = int_0^x (u - M)`` are
interchangeable through :func:`antiderivative_transform` and
:func:`inverse_transform`; ``M`` is the (conserved) cell mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from ._kernels import deriv_coefficients
from .grids import IntervalGrid

__all__ = [
    "ModelError",
    "ModelParams",
    "SymbolicData",
    "TabulatedData",
    "InitialData",
    "CompatibilityReport",
    "PRESETS",
    "build_initial_data",
    "check_compatibility",
    "antiderivative_transform",
    "inverse_transform",
    "read_table",
]

_X = sp.Symbol("x", real=True)
_VSTAR = sp.Symbol("v_star", real=True)

CONDITION_NAMES = (
    "v0 - v_star",
    "phi0_x + M",
    "phi0_xx v0_x - phi0_xxx",
    "(phi_t)_xx - (phi_t)_x v0_x",
    "(phi_tt)_xx - (phi_tt)_x v0_x + 2 (phi_t)_x (phi0_x + M) v0_x",
)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Dials of the eps-family: diffusivity, wall saturation, horizon and data preset."""

    epsilon: float = 0.0
    v_star: float = 1.0
    T: float = 0.25
    preset: str = "paper_poly8"

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ModelError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.v_star >= 0.0:
            raise ModelError(f"v_star must be >= 0, got {self.v_star}")
        if not self.T > 0.0:
            raise ModelError(f"horizon T must be > 0, got {self.T}")

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return ModelParams(epsilon, self.v_star, self.T, self.preset)


@dataclass(frozen=True)
class SymbolicData:
    """Closed-form initial data; expressions in ``x`` and ``v_star`` (sympy syntax)."""

    name: str
    u0: str
    v0: str

    def expressions(self, v_star: float):
        u = sp.sympify(self.u0, locals={"x": _X, "v_star": _VSTAR})
        v = sp.sympify(self.v0, locals={"x": _X, "v_star": _VSTAR})
        vs = sp.nsimplify(v_star) if float(v_star).is_integer() else sp.Float(v_star)
        return u.subs(_VSTAR, vs), v.subs(_VSTAR, vs)


@dataclass(frozen=True)
class TabulatedData:
    """Initial data sampled at arbitrary increasing abscissae covering [0, 1]."""

    x: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    name: str = "tabulated"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.shape[0] < 2 or np.any(np.diff(x) <= 0):
            raise ModelError("tabulated abscissae must be strictly increasing")
        if abs(x[0]) > 1e-12 or abs(x[-1] - 1.0) > 1e-12:
            raise ModelError("tabulated data must cover [0, 1] including both endpoints")
        if np.shape(self.u0) != x.shape or np.shape(self.v0) != x.shape:
            raise ModelError("tabulated u0/v0 must match the abscissae")


PRESETS = {
    "paper_poly8": SymbolicData("paper_poly8", "x**8*(1-x)**8", "v_star + x**6*(1-x)**6"),
}


@dataclass(frozen=True)
class InitialData:
    grid: IntervalGrid
    u0: np.ndarray
    v0: np.ndarray
    phi0: np.ndarray
    mass: float
    source: SymbolicData | TabulatedData
    degenerate: bool

    @property
    def name(self) -> str:
        return self.source.name


@dataclass
class CompatibilityReport:
    """Endpoint residuals of the five compatibility conditions."""

    residuals: dict = field(default_factory=dict)  # (condition, wall) -> value
    tolerance: float = 1e-8
    method: str = "symbolic"
    reliable: bool = True
    note: str = ""

    @property
    def flags(self) -> dict:
        return {key: abs(val) <= self.tolerance for key, val in self.residuals.items()}

    @property
    def passed(self) -> bool:
        return self.reliable and all(self.flags.values())

    def failures(self) -> list:
        return [key for key, ok in self.flags.items() if not ok]

    def max_residual(self) -> float:
        return max(abs(v) for v in self.residuals.values())

    def lines(self) -> list:
        out = []
        for (cond, wall), val in self.residuals.items():
            mark = "pass" if abs(val) <= self.tolerance else "FAIL"
            out.append(f"{mark}  x={wall}  {CONDITION_NAMES[cond]:<62s} {val: .3e}")
        return out


def read_table(path) -> tuple[str, np.ndarray, np.ndarray]:
    """Read a two-column (x, value) text table whose first line names the field."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().lstrip("#").strip()
    data = np.loadtxt(path, skiprows=1, delimiter=None if "," not in _second_line(path) else ",", ndmin=2)
    if data.shape[1] != 2:
        raise ModelError(f"{path}: expected two columns, found {data.shape[1]}")
    return header, data[:, 0], data[:, 1]


def _second_line(path):
    with Path(path).open() as fh:
        fh.readline()
        return fh.readline()


def antiderivative_transform(u, mass: float, grid: IntervalGrid) -> np.ndarray:
    """``phi(x_i) = int_0^{x_i} (u - M)`` by the cumulative trapezoid rule (acts on the last axis)."""
    u = np.asarray(u, dtype=float)
    h = grid.spacing
    g = u - mass
    seg = 0.5 * h * (g[..., 1:] + g[..., :-1])
    phi = np.zeros_like(g)
    phi[..., 1:] = np.cumsum(seg, axis=-1)
    return phi


def inverse_transform(phi, mass: float, grid: IntervalGrid) -> np.ndarray:
    """``u = phi_x + M`` with centred differences inside and one-sided second-order ones at the walls."""
    phi = np.asarray(phi, dtype=float)
    cm, c0, cp, e0, e1 = deriv_coefficients(grid.nodes)
    d = np.empty_like(phi)
    d[..., 1:-1] = cm[1:-1] * phi[..., :-2] + c0[1:-1] * phi[..., 1:-1] + cp[1:-1] * phi[..., 2:]
    d[..., 0] = e0[0] * phi[..., 0] + e0[1] * phi[..., 1] + e0[2] * phi[..., 2]
    d[..., -1] = e1[0] * phi[..., -1] + e1[1] * phi[..., -2] + e1[2] * phi[..., -3]
    return d + mass


def _resolve_source(preset, data_paths=None):
    if isinstance(preset, (SymbolicData, TabulatedData)):
        return preset
    if preset in PRESETS:
        return PRESETS[preset]
    if preset == "tabulated":
        if not data_paths:
            raise ModelError("preset 'tabulated' needs u0/v0 table paths")
        _, xu, u = read_table(data_paths[0])
        _, xv, v = read_table(data_paths[1])
        if xu.shape != xv.shape or np.any(xu != xv):
            raise ModelError("u0 and v0 tables must share abscissae")
        return TabulatedData(xu, u, v)
    raise ModelError(f"unknown initial-data preset {preset!r}; known: {sorted(PRESETS)} or 'tabulated'")


def build_initial_data(preset, params: ModelParams, grid: IntervalGrid, data_paths=None) -> InitialData:
    """Sample the initial data on ``grid`` and derive the mass and potential.

    ``preset`` is a preset name, ``"tabulated"`` (with ``data_paths=(u0_file, v0_file)``),
    or a :class:`SymbolicData`/:class:`TabulatedData` instance.
    """
    source = _resolve_source(preset, data_paths)
    x = grid.nodes
    if isinstance(source, SymbolicData):
        ue, ve = source.expressions(params.v_star)
        u0 = np.broadcast_to(sp.lambdify(_X, ue, "numpy")(x), x.shape).astype(float)
        v0 = np.broadcast_to(sp.lambdify(_X, ve, "numpy")(x), x.shape).astype(float)
    else:
        u0 = np.interp(x, source.x, source.u0)
        v0 = np.interp(x, source.x, source.v0)
    if np.any(u0 < 0.0):
        raise ModelError(f"initial density has negative samples (min {u0.min():.3e})")
    if np.any(v0 < 0.0):
        raise ModelError(f"initial oxygen has negative samples (min {v0.min():.3e})")
    mass = grid.integrate(u0)
    phi0 = antiderivative_transform(u0, mass, grid)
    degenerate = bool(u0.min() <= 1e-14 * max(1.0, u0.max()))
    return InitialData(grid, u0, v0, phi0, mass, source, degenerate)


def _conditions(u, v, v_star, d):
    """Five boundary expressions in terms of the density ``u = phi0_x + M`` and ``v``.

    ``d`` differentiates in x; works on sympy expressions and numpy polynomials alike.
    """
    ux = d(u)
    vx = d(v)
    phi_t = ux - u * vx
    phi_t_x = d(phi_t)
    phi_tt = d(phi_t_x) + u * d(u * v) - phi_t_x * vx
    phi_tt_x = d(phi_tt)
    return (
        v - v_star,
        u,
        ux * vx - d(ux),
        d(phi_t_x) - phi_t_x * vx,
        d(phi_tt_x) - phi_tt_x * vx + 2 * phi_t_x * u * vx,
    )


def check_compatibility(data: InitialData, v_star: float, tol: float | None = None,
                        fit_points: int = 24, fit_degree: int = 9) -> CompatibilityReport:
    """Residuals of the five boundary compatibility conditions at x = 0 and x = 1.

    Symbolic data are differentiated exactly. Tabulated data are replaced near each
    wall by a least-squares polynomial of degree ``fit_degree`` through the first
    ``fit_points`` samples; tables too short for that are reported as unreliable.
    """
    source = data.source
    if isinstance(source, SymbolicData):
        tol = 1e-8 if tol is None else tol
        ue, ve = source.expressions(v_star)
        vs = sp.nsimplify(v_star) if float(v_star).is_integer() else sp.Float(v_star)
        if ue.is_polynomial(_X) and ve.is_polynomial(_X):
            # exact polynomial arithmetic avoids expression swell in the nested derivatives
            exprs = _conditions(sp.Poly(ue, _X), sp.Poly(ve, _X), vs, lambda f: f.diff(_X))
            value = lambda e, wall: e.eval(wall) if isinstance(e, sp.Poly) else e  # noqa: E731
        else:
            exprs = _conditions(ue, ve, vs, lambda f: sp.diff(f, _X))
            value = lambda e, wall: e.subs(_X, wall)  # noqa: E731
        res = {}
        for wall in (0, 1):
            for k, e in enumerate(exprs):
                res[(k, wall)] = float(sp.N(value(e, wall), 30))
        return CompatibilityReport(res, tol, "symbolic")

    tol = 1e-4 if tol is None else tol
    x, u, v = np.asarray(source.x), np.asarray(source.u0), np.asarray(source.v0)
    P = np.polynomial.Polynomial
    res = {}
    reliable = x.shape[0] >= 4 * fit_points
    note = "" if reliable else f"table has {x.shape[0]} rows; need >= {4 * fit_points} for endpoint derivatives"
    for wall in (0, 1):
        sl = slice(0, fit_points) if wall == 0 else slice(-fit_points, None)
        y = x[sl] - wall
        deg = min(fit_degree, y.shape[0] - 1)
        pu = P.fit(y, u[sl], deg).convert()
        pv = P.fit(y, v[sl], deg).convert()
        exprs = _conditions(pu, pv, v_star, lambda f: f.deriv())
        for k, e in enumerate(exprs):
            res[(k, wall)] = float(e(0.0)) if isinstance(e, P) else float(e)
    return CompatibilityReport(res, tol, "polynomial-fit", reliable, note)
