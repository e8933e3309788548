"""Assembly of the outer/layer expansion on the interval grid.

Three truncations are offered:

``order=0``
    phi = phi^{I,0};  v = v^{I,0} + v^{B,0}(z) + v^{b,0}(s)
``order=1``
    phi adds sqrt(eps) (phi^{I,1} + phi^{B,1}(z) + phi^{b,1}(s)); v as for order 0
``order="full"``
    the approximate pair (Phi^A, V^A): order-1 phi plus eps (phi^{B,2} + phi^{b,2}),
    order-0 v plus sqrt(eps) (v^{I,1} + v^{B,1} + v^{b,1}), plus affine correctors
    that restore the wall values exactly.

In every case ``u = u^{I,0} + u^{B,0}(z) + u^{b,0}(s)``. Layer fields are sampled
at ``z = x / sqrt(eps)`` and ``s = (1 - x) / sqrt(eps)`` by linear interpolation,
and are zero beyond ``z_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import IntervalGrid
from .interval import OuterProfiles, Trajectory
from .layers import LayerProfiles
from .model import inverse_transform

__all__ = ["CorrectorPair", "Assembly", "Remainders", "sample_layer", "build_correctors", "assemble",
           "compute_remainders"]

ORDERS = (0, 1, "full")


def sample_layer(values, grid, points) -> np.ndarray:
    """Linear interpolation of half-line rows at ``points``; zero past ``z_max``.

    ``values`` is 1-D (one time) or 2-D (time along the first axis).
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    nodes = grid.nodes
    if values.ndim == 1:
        return np.interp(points, nodes, values, right=0.0)
    return np.stack([np.interp(points, nodes, row, right=0.0) for row in values])


@dataclass
class CorrectorPair:
    """Affine-in-x correctors: ``b(x, t) = left(t) (1 - x) + right(t) x``."""

    phi_left: np.ndarray
    phi_right: np.ndarray
    v_left: np.ndarray
    v_right: np.ndarray

    def b_phi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.phi_left[:, None] * (1.0 - x) + self.phi_right[:, None] * x

    def b_v(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.v_left[:, None] * (1.0 - x) + self.v_right[:, None] * x

    @classmethod
    def zeros(cls, nt: int) -> "CorrectorPair":
        z = np.zeros(nt)
        return cls(z, z.copy(), z.copy(), z.copy())


def build_correctors(left: LayerProfiles, right: LayerProfiles, epsilon: float) -> CorrectorPair:
    """Correctors that cancel the far-wall tails of the layer profiles.

    With ``L = 1/sqrt(eps)``::

        b_phi = -(1-x) [sqrt(eps) phi^{b,1}(L) + eps phi^{b,2}(L) + eps phi^{B,2}(0)]
                - x    [sqrt(eps) phi^{B,1}(L) + eps phi^{B,2}(L) + eps phi^{b,2}(0)]
        b_v   = (x-1) [v^{b,0}(L) + sqrt(eps) v^{b,1}(L)] - x [v^{B,0}(L) + sqrt(eps) v^{B,1}(L)]

    Second-order terms are dropped when the layers carry no second-order pair.
    """
    if epsilon <= 0:
        raise ValueError("correctors need epsilon > 0")
    se = math.sqrt(epsilon)
    far = 1.0 / se

    def at(layer, name, where):
        vals = getattr(layer, name)
        if vals is None:
            return np.zeros(layer.v0.shape[0])
        return sample_layer(vals, layer.grid, np.array([where]))[:, 0]

    phi_left = -(se * at(right, "phi1", far) + epsilon * at(right, "phi2", far) + epsilon * at(left, "phi2", 0.0))
    phi_right = -(se * at(left, "phi1", far) + epsilon * at(left, "phi2", far) + epsilon * at(right, "phi2", 0.0))
    v_left = -(at(right, "v0", far) + se * at(right, "v1", far))
    v_right = -(at(left, "v0", far) + se * at(left, "v1", far))
    return CorrectorPair(phi_left, phi_right, v_left, v_right)


@dataclass
class Assembly:
    order: object
    epsilon: float
    grid: IntervalGrid
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    mass: float
    components: list = field(default_factory=list)
    correctors: CorrectorPair | None = None

    def columns(self) -> tuple[list, np.ndarray]:
        nt, nx = self.u.shape
        table = np.column_stack([np.repeat(self.times, nx), np.tile(self.grid.nodes, nt),
                                 self.u.ravel(), self.v.ravel(), self.phi.ravel()])
        return ["t", "x", "u_app", "v_app", "phi_app"], table


def assemble(order, outer: OuterProfiles, left: LayerProfiles, right: LayerProfiles, epsilon: float,
             correctors: CorrectorPair | None = None) -> Assembly:
    """Evaluate the requested truncation of the expansion at the outer output times."""
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    if epsilon <= 0:
        raise ValueError("assembly needs epsilon > 0")
    if left.side != "left" or right.side != "right":
        raise ValueError("pass the left layer first, then the right layer")
    if not (np.array_equal(left.times, outer.times) and np.array_equal(right.times, outer.times)):
        raise ValueError("layer and outer output times are not aligned")
    if order in (1, "full") and not outer.has_first_order:
        raise ValueError(f"order {order!r} needs the first-order outer pair")
    if order == "full" and not (left.has_order2 and right.has_order2):
        raise ValueError("full assembly needs the second-order layer pairs")

    grid = outer.grid
    x = grid.nodes
    se = math.sqrt(epsilon)
    z = x / se
    s = (1.0 - x) / se

    def L(layer, name, pts):
        return sample_layer(getattr(layer, name), layer.grid, pts)

    u = outer.u + L(left, "u", z) + L(right, "u", s)
    v = outer.v + L(left, "v0", z) + L(right, "v0", s)
    phi = outer.phi.copy()
    comps = ["u^{I,0}", "u^{B,0}", "u^{b,0}", "v^{I,0}", "v^{B,0}", "v^{b,0}", "phi^{I,0}"]
    corr = None
    if order in (1, "full"):
        phi = phi + se * (outer.phi1 + L(left, "phi1", z) + L(right, "phi1", s))
        comps += ["phi^{I,1}", "phi^{B,1}", "phi^{b,1}"]
    if order == "full":
        phi = phi + epsilon * (L(left, "phi2", z) + L(right, "phi2", s))
        v = v + se * (outer.v1 + L(left, "v1", z) + L(right, "v1", s))
        corr = correctors if correctors is not None else build_correctors(left, right, epsilon)
        phi = phi + corr.b_phi(x)
        v = v + corr.b_v(x)
        comps += ["phi^{B,2}", "phi^{b,2}", "v^{I,1}", "v^{B,1}", "v^{b,1}", "b_phi", "b_v"]
    return Assembly(order, epsilon, grid, outer.times.copy(), u, v, phi, outer.mass, comps, corr)


@dataclass
class Remainders:
    """Sup-norm gaps over nodes and output times; ``per_time`` holds the row maxima."""

    E_phi: float
    E_v: float
    E_u: float
    E_phix: float
    per_time: dict = field(default_factory=dict)


def compute_remainders(full, assembly: Assembly) -> Remainders:
    """Compare a full trajectory (or another assembly) with ``assembly``.

    ``phi`` of the full solution is its anti-derivative transform; ``E_phix``
    compares the x-derivatives of both potentials.
    """
    if isinstance(full, Trajectory):
        fu, fv, fphi = full.u, full.v, full.phi()
    else:
        fu, fv, fphi = full.u, full.v, full.phi
    if fu.shape != assembly.u.shape or not np.array_equal(full.times, assembly.times):
        raise ValueError("full solution and assembly live on different grids or output times")
    if not np.array_equal(full.grid.nodes, assembly.grid.nodes):
        raise ValueError("full solution and assembly use different nodes")
    du = np.abs(fu - assembly.u).max(axis=1)
    dv = np.abs(fv - assembly.v).max(axis=1)
    dp = np.abs(fphi - assembly.phi).max(axis=1)
    dpx = np.abs(inverse_transform(fphi, 0.0, assembly.grid) - inverse_transform(assembly.phi, 0.0, assembly.grid))
    dpx = dpx.max(axis=1)
    per = {"E_u": du, "E_v": dv, "E_phi": dp, "E_phix": dpx}
    return Remainders(float(dp.max()), float(dv.max()), float(du.max()), float(dpx.max()), per)
