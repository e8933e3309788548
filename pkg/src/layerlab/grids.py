"""Meshes on the unit interval and on the truncated half-line, plus quadrature.

Layer profiles live on ``[0, z_max]`` in the stretched variable ``z = x / sqrt(eps)``
(left wall) or ``s = (1 - x) / sqrt(eps)`` (right wall, stored reflected), and are
taken to vanish beyond ``z_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IntervalGrid",
    "HalfLineGrid",
    "QuadratureRule",
    "make_interval_grid",
    "make_halfline_grid",
    "integrate_tail",
    "tail_integral",
    "DECAY_BUDGET",
    "GridError",
]

DECAY_BUDGET = 1e-12
MIN_INTERVAL_CELLS = 16
MIN_HALFLINE_CELLS = 64


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalGrid:
    """Node set ``0 = x_0 < ... < x_n = 1``."""

    n: int
    nodes: np.ndarray
    grading: str = "uniform"
    stretch: float = 1.0

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights; also the control-volume lengths of the flux scheme."""
        h = self.spacing
        w = np.empty(self.n + 1)
        w[0] = 0.5 * h[0]
        w[-1] = 0.5 * h[-1]
        w[1:-1] = 0.5 * (h[:-1] + h[1:])
        return w

    @property
    def spacing_ratio(self) -> float:
        h = self.spacing
        return float(h.max() / h.min())

    @property
    def dx_max(self) -> float:
        return float(self.spacing.max())

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f))


@dataclass(frozen=True)
class HalfLineGrid:
    """Uniform nodes on ``[0, z_max]``; ``orientation`` records the wall it serves."""

    z_max: float
    m: int
    orientation: str = "left"
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.linspace(0.0, self.z_max, self.m + 1))

    @property
    def dz(self) -> float:
        return self.z_max / self.m

    def reflected(self) -> "HalfLineGrid":
        other = "right" if self.orientation == "left" else "left"
        return HalfLineGrid(self.z_max, self.m, other)


@dataclass(frozen=True)
class QuadratureRule:
    kind: str = "trapezoid"

    def __post_init__(self):
        if self.kind not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")

    def weights(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=float)
        h = np.diff(nodes)
        npts = nodes.shape[0]
        if self.kind == "trapezoid" or npts < 3:
            w = np.zeros(npts)
            w[:-1] += 0.5 * h
            w[1:] += 0.5 * h
            return w
        # composite Simpson on uniform panels; an odd panel count gets a trapezoid last cell
        dz = h[0]
        w = np.zeros(npts)
        last = npts - 1 if (npts - 1) % 2 == 0 else npts - 2
        for j in range(0, last, 2):
            w[j] += dz / 3.0
            w[j + 1] += 4.0 * dz / 3.0
            w[j + 2] += dz / 3.0
        if last != npts - 1:
            w[-2] += 0.5 * dz
            w[-1] += 0.5 * dz
        return w

    def integrate(self, f, nodes) -> float:
        return float(np.dot(self.weights(nodes), f))


def _tanh_map(s, stretch):
    # symmetric clustering at both ends; identity for stretch == 1
    if stretch == 1.0:
        return s
    k = math.atanh(1.0 - 1.0 / stretch) if stretch > 1.0 else 0.0
    return 0.5 * (1.0 + np.tanh(k * (2.0 * s - 1.0)) / math.tanh(k))


def make_interval_grid(n: int, grading: str = "uniform", stretch: float = 1.0) -> IntervalGrid:
    """Build an interval grid with ``n`` cells.

    ``grading="tanh"`` clusters nodes at both walls through
    ``x(s) = (1 + tanh(k (2s - 1)) / tanh k) / 2`` with ``k = atanh(1 - 1/stretch)``;
    ``stretch = 1`` gives the uniform partition.
    """
    if not isinstance(n, (int, np.integer)) or n < MIN_INTERVAL_CELLS:
        raise GridError(f"interval grid needs at least {MIN_INTERVAL_CELLS} cells, got {n}")
    if grading not in ("uniform", "tanh"):
        raise GridError(f"unknown grading {grading!r}")
    if not stretch >= 1.0:
        raise GridError(f"grading stretch must be >= 1, got {stretch}")
    if grading == "uniform" or stretch == 1.0:
        nodes = np.arange(n + 1) / n
        return IntervalGrid(int(n), nodes, "uniform", 1.0)
    s = np.arange(n + 1) / n
    nodes = _tanh_map(s, float(stretch))
    nodes[0], nodes[-1] = 0.0, 1.0
    if np.any(np.diff(nodes) <= 0.0):
        raise GridError("grading map produced non-monotone nodes")
    return IntervalGrid(int(n), nodes, "tanh", float(stretch))


def make_halfline_grid(z_max: float = 32.0, m: int = 2048, orientation: str = "left") -> HalfLineGrid:
    if math.exp(-z_max) >= DECAY_BUDGET:
        raise GridError(f"z_max={z_max} violates the decay budget exp(-z_max) < {DECAY_BUDGET:g}")
    if m < MIN_HALFLINE_CELLS:
        raise GridError(f"half-line grid needs at least {MIN_HALFLINE_CELLS} cells, got {m}")
    if orientation not in ("left", "right"):
        raise GridError(f"orientation must be 'left' or 'right', got {orientation!r}")
    return HalfLineGrid(float(z_max), int(m), orientation)


def integrate_tail(f, z0: float, grid: HalfLineGrid, rule: QuadratureRule | None = None) -> float:
    """Quadrature of ``f`` over ``[z0, z_max]``; the part beyond ``z_max`` is dropped.

    ``z0`` that falls between nodes is handled by linear interpolation of ``f`` on
    the partial cell, which keeps the trapezoid value additive in ``z0``.
    """
    rule = rule or QuadratureRule()
    f = np.asarray(f, dtype=float)
    z = grid.nodes
    if not 0.0 <= z0 <= grid.z_max:
        raise GridError(f"z0={z0} outside [0, {grid.z_max}]")
    j = int(np.searchsorted(z, z0, side="right")) - 1
    j = min(j, grid.m)
    if z[j] == z0:
        return rule.integrate(f[j:], z[j:])
    theta = (z0 - z[j]) / grid.dz
    f0 = (1.0 - theta) * f[j] + theta * f[j + 1]
    partial = 0.5 * (z[j + 1] - z0) * (f0 + f[j + 1])
    return partial + rule.integrate(f[j + 1:], z[j + 1:])


def tail_integral(f, dz: float) -> np.ndarray:
    """Trapezoid values of ``int_{z_j}^{z_max} f`` at every node (vectorised)."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    seg = 0.5 * dz * (f[..., 1:] + f[..., :-1])
    out[..., :-1] = np.cumsum(seg[..., ::-1], axis=-1)[..., ::-1]
    return out
