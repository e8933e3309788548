"""eps-sweeps, rate fits, layer thickness and the invariant battery.

The eps-independent profiles (outer problems and layers) depend only on the
interval mesh and time step, so :func:`run_sweep` computes them once per
``(n, dt)`` and reuses them for every eps that shares the mesh.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .expansion import assemble, compute_remainders
from .grids import make_halfline_grid, make_interval_grid
from .interval import (
    NEG_TOL,
    SolverError,
    Trajectory,
    exponential_identity_residual,
    make_stepper,
    solve_full,
    solve_outer0,
    solve_outer1,
)
from .layers import mirror_mismatch, solve_layer_order2, solve_layer_v0
from .model import ModelParams, build_initial_data

log = logging.getLogger(__name__)

__all__ = [
    "SweepPlan",
    "RateFit",
    "ConvergenceReport",
    "ProfileSet",
    "InvariantResult",
    "build_profiles",
    "run_sweep",
    "fit_rate",
    "measure_thickness",
    "boundary_value_check",
    "interior_check",
    "invariant_battery",
    "inject_fault",
    "self_convergence",
    "DEFAULT_EPSILONS",
]

DEFAULT_EPSILONS = tuple(2.0 ** -k for k in range(6, 15))
CSV_COLUMNS = ("epsilon", "n", "E_u", "E_v", "E_phi", "thickness_left", "thickness_right", "boundary_residual")


@dataclass(frozen=True)
class SweepPlan:
    epsilons: tuple = DEFAULT_EPSILONS
    v_star: float = 1.0
    T: float = 0.25
    preset: str = "paper_poly8"
    data_paths: tuple | None = None
    cells_per_width: float = 8.0  # dx <= sqrt(eps) / cells_per_width
    n_cap: int = 2 ** 15
    grading: str = "uniform"
    stretch: float = 1.0
    z_max: float = 32.0
    m: int = 2048
    n_out: int = 20
    dt_safety: float = 0.4
    min_steps: int = 2000
    threshold: float = 0.1
    delta: float = 0.25

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ValueError("sweep needs at least one epsilon")
        if any(e <= 0 for e in eps):
            raise ValueError("sweep epsilons must be > 0")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("sweep epsilons must be strictly decreasing")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold fraction must lie in (0, 1)")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")

    def cells_for(self, epsilon: float) -> int:
        """Power-of-two cell count with ``1/n <= sqrt(eps)/cells_per_width`` (at least 64)."""
        need = self.cells_per_width / math.sqrt(epsilon)
        return max(64, 2 ** math.ceil(math.log2(need) - 1e-12))

    def params(self, epsilon: float) -> ModelParams:
        return ModelParams(epsilon, self.v_star, self.T, self.preset)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    residual: float
    points: int


@dataclass
class ProfileSet:
    """eps-independent artifacts on one interval mesh."""

    data: object
    stepper: object
    outer0: object
    outer: object  # with the first-order pair
    left: object
    right: object


@dataclass
class InvariantResult:
    name: str
    value: float
    bound: float
    passed: bool
    context: str = ""


@dataclass
class ConvergenceReport:
    plan: SweepPlan
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    ledger: list = field(default_factory=list)
    interior: dict = field(default_factory=dict)
    degenerate: bool = False
    incomplete: bool = False
    error: str = ""
    notes: list = field(default_factory=list)
    artifacts: list | None = None

    @property
    def invariants_passed(self) -> bool:
        return all(r.passed for r in self.ledger)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])

    def summary(self) -> dict:
        return {
            "plan": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.plan).items()},
            "degenerate": self.degenerate,
            "incomplete": self.incomplete,
            "error": self.error,
            "fits": {k: (asdict(v) if v is not None else None) for k, v in self.fits.items()},
            "rows": self.rows,
            "interior": self.interior,
            "invariants": [asdict(r) for r in self.ledger],
            "invariants_passed": self.invariants_passed,
            "notes": self.notes,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, default=_json_default)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def fit_rate(eps, err) -> RateFit:
    """Least-squares line through ``(log eps, log err)``; the slope is the empirical rate.

    Nonpositive or nonfinite errors are dropped with a warning; fewer than three
    usable points raise ``ValueError``.
    """
    eps = np.asarray(eps, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = np.isfinite(err) & (err > 0) & (eps > 0)
    if not keep.all():
        warnings.warn(f"fit_rate: dropped {int((~keep).sum())} nonpositive or missing values", RuntimeWarning,
                      stacklevel=2)
    if keep.sum() < 3:
        raise ValueError(f"fit_rate needs at least 3 positive points, got {int(keep.sum())}")
    lx = np.log(eps[keep])
    ly = np.log(err[keep])
    (slope, intercept), res, *_ = np.polyfit(lx, ly, 1, full=True)
    ss_res = float(res[0]) if len(res) else 0.0
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(r2), math.sqrt(ss_res / keep.sum()), int(keep.sum()))


def _try_fit(eps, err, name, notes):
    try:
        return fit_rate(eps, err)
    except ValueError as exc:
        notes.append(f"{name}: slope absent ({exc})")
        return None


def _first_drop(x, d, level):
    # x measured from the wall; d[0] is the wall value
    idx = np.nonzero(d <= level)[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    if i == 0:
        return 0.0
    d0, d1 = d[i - 1], d[i]
    if d0 > 0 and d1 > 0:
        theta = (math.log(d0) - math.log(level)) / (math.log(d0) - math.log(d1))
    else:
        theta = (d0 - level) / (d0 - d1)
    return float(x[i - 1] + theta * (x[i] - x[i - 1]))


def measure_thickness(v_full, v_outer, x, epsilon=None, threshold: float = 0.1, tol: float = 1e-12):
    """Distance from each wall to the first point where ``|v_full - v_outer|`` falls to
    ``threshold`` times its wall value.

    Interpolation between the bracketing nodes is linear in ``log |.|``, which is
    exact for exponential profiles. A wall whose amplitude is below ``10 tol``
    has no measurable layer and yields ``None``.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    d = np.abs(np.asarray(v_full, dtype=float) - np.asarray(v_outer, dtype=float))
    out = []
    for dd, xx in ((d, x - x[0]), (d[::-1], x[-1] - x[::-1])):
        amp = dd[0]
        out.append(None if amp < 10 * tol else _first_drop(xx, dd, threshold * amp))
    return tuple(out)


def boundary_value_check(u_full_traces, outer_traces, v_star: float, epsilons=None):
    """Gap between the full wall density and ``u^{I,0} exp(v_* - v^{I,0})`` at the wall.

    ``u_full_traces`` is a list (one per eps) of wall values at the output times;
    ``outer_traces`` the matching list of ``(u^{I,0}, v^{I,0})`` wall pairs.
    Returns the per-eps maxima over time and, with three or more eps, their rate fit.
    """
    res = []
    for uf, (a, b) in zip(u_full_traces, outer_traces):
        pred = np.asarray(a) * np.exp(v_star - np.asarray(b))
        res.append(float(np.abs(np.asarray(uf) - pred).max()))
    fit = None
    if epsilons is not None and len(res) >= 3:
        fit = fit_rate(epsilons, res)
    return np.array(res), fit


def interior_check(u_full, u_outer, v_full, v_outer, x, delta: float = 0.25) -> dict:
    """Sup of the full-vs-outer gaps on ``[delta, 1 - delta]`` and on the whole interval."""
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    x = np.asarray(x)
    mask = (x >= delta - 1e-14) & (x <= 1.0 - delta + 1e-14)
    du = np.abs(np.asarray(u_full) - np.asarray(u_outer))
    dv = np.abs(np.asarray(v_full) - np.asarray(v_outer))
    return {
        "interior_u": float(du[..., mask].max()),
        "full_u": float(du.max()),
        "interior_v": float(dv[..., mask].max()),
        "full_v": float(dv.max()),
    }


def build_profiles(params: ModelParams, n: int, plan: SweepPlan | None = None, data=None) -> ProfileSet:
    """Outer problems and both layers (through second order) on an ``n``-cell mesh."""
    plan = plan or SweepPlan(epsilons=(max(params.epsilon, 1e-300),), v_star=params.v_star, T=params.T,
                             preset=params.preset)
    grid = make_interval_grid(n, plan.grading, plan.stretch)
    if data is None:
        data = build_initial_data(params.preset, params, grid, plan.data_paths)
    stepper = make_stepper(grid, params.T, data.v0, plan.n_out, plan.dt_safety, plan.min_steps)
    outer0 = solve_outer0(params, data, stepper)
    hl = make_halfline_grid(plan.z_max, plan.m)
    left = solve_layer_v0("left", outer0, hl)
    right = solve_layer_v0("right", outer0, hl.reflected())
    outer = solve_outer1(outer0, data, (left.step_times, left.phi1_trace), (right.step_times, right.phi1_trace))
    left = solve_layer_order2("left", left, outer)
    right = solve_layer_order2("right", right, outer)
    return ProfileSet(data, stepper, outer0, outer, left, right)


def _is_symmetric(data) -> bool:
    return bool(np.allclose(data.u0, data.u0[::-1], rtol=0, atol=1e-14 * max(1e-300, np.abs(data.u0).max()))
                and np.allclose(data.v0, data.v0[::-1], rtol=0, atol=1e-14 * max(1.0, np.abs(data.v0).max())))


@dataclass
class RunArtifacts:
    """Everything :func:`invariant_battery` inspects for one eps."""

    params: ModelParams
    profiles: ProfileSet
    trajectory: Trajectory | None = None
    assembly: object = None


def inject_fault(art: RunArtifacts, kind: str) -> RunArtifacts:
    """Corrupted copy of ``art`` for exercising the battery (test hook)."""
    if kind == "flip_v_sign":
        if art.trajectory is None:
            raise ValueError("no trajectory to corrupt")
        return replace(art, trajectory=replace(art.trajectory, v=-art.trajectory.v))
    if kind == "negative_u":
        ps = art.profiles
        bad = replace(ps.outer0, u=ps.outer0.u.copy())
        bad.u[-1, bad.u.shape[1] // 2] = -1e-6
        return replace(art, profiles=replace(ps, outer0=bad))
    raise ValueError(f"unknown fault {kind!r}")


def invariant_battery(art: RunArtifacts, fault: str | None = None) -> list:
    """Evaluate every module-level invariant on one run; failures become ledger entries."""
    if fault is not None:
        art = inject_fault(art, fault)
    ps = art.profiles
    p = art.params
    o0 = ps.outer0
    data = ps.data
    ctx = f"eps={p.epsilon:g}, n={data.grid.n}"
    out = []

    def add(name, value, bound, ok=None):
        ok = (value <= bound) if ok is None else ok
        out.append(InvariantResult(name, float(value), float(bound), bool(ok), ctx))

    add("outer0 mass drift (relative)", o0.relative_mass_drift, 1e-10)
    add("outer0 positivity (-min u)", max(0.0, -float(o0.u.min())), NEG_TOL)
    add("outer0 v <= max v0", max(0.0, float(o0.v.max() - data.v0.max())), 1e-14)
    dt = ps.stepper.dt
    add("outer0 exponential identity", exponential_identity_residual(o0), 5 * dt * dt * float(data.v0.max()))
    add("outer phi0 walls", float(np.abs(o0.phi[:, [0, -1]]).max()), 1e-10 * max(o0.mass, 1e-300) + 1e-300)
    slack = 1e-10
    for lay in (ps.left, ps.right):
        lo = min(float(lay.v0.min()), lay.v_min)
        hi = max(float(lay.v0.max()), lay.v_max)
        add(f"layer bracket {lay.side}", max(0.0, -lo, hi - p.v_star), slack)
        fields = [k for k in ("v0", "phi1", "v1", "phi2") if getattr(lay, k) is not None]
        zero = max(float(np.abs(getattr(lay, k)[0]).max()) for k in fields)
        add(f"layer zero initial data {lay.side}", zero, 0.0)
        q = lay.v0.shape[1] // 4
        tail = max(float(np.abs(getattr(lay, k)[:, -q:]).max()) for k in fields)
        add(f"layer decay {lay.side}", tail, 1e-8)
        dz = lay.grid.dz
        dphi = np.gradient(lay.phi1, dz, axis=1, edge_order=2)
        sign = -1.0 if lay.side == "left" else 1.0  # d/ds of phi^{b,1} is -u^{b,0}
        scale = max(float(np.abs(lay.u).max()), 1e-300)
        # central differences of a trapezoid tail differ from the integrand by dz^2/4 u_zz
        curv = float(np.abs(np.diff(lay.u, 2, axis=1)).max())
        add(f"phi1_z = u identity {lay.side} (relative)", float(np.abs(-sign * dphi - lay.u).max()) / scale,
            0.5 * curv / scale + 1e-12)
    if _is_symmetric(data):
        mm = mirror_mismatch(ps.left, ps.right)
        add("mirror symmetry", max(mm.values()), 1e-8)
    tr = art.trajectory
    if tr is not None:
        add("full mass drift (relative)", tr.relative_mass_drift, 1e-10)
        vlo = min(0.0, float(data.v0.min()))
        vhi = max(p.v_star, float(data.v0.max()))
        viol = max(0.0, vlo - float(tr.v.min()), float(tr.v.max()) - vhi)
        add("full maximum principle", viol, 1e-12 * max(1.0, vhi))
    asm = art.assembly
    if asm is not None and asm.order == "full":
        scale = max(1.0, p.v_star)
        add("assembly V^A wall values", float(np.abs(asm.v[:, [0, -1]] - p.v_star).max()), 1e-12 * scale)
        add("assembly Phi^A wall values", float(np.abs(asm.phi[:, [0, -1]]).max()), 1e-12 * scale)
    return out


def run_sweep(plan: SweepPlan, progress=None, keep_artifacts: bool = False) -> ConvergenceReport:
    """Solve the full system for every eps in ``plan`` and compare with the expansion."""
    rep = ConvergenceReport(plan)
    rep.degenerate = plan.v_star == 0.0
    if rep.degenerate:
        rep.notes.append("v_star = 0: layer-free mode, remainders measure plain zero-diffusion convergence")
    cache = {}
    eps_used = []
    u_walls, outer_walls = [], []
    if keep_artifacts:
        rep.artifacts = []
    last = None
    for eps in plan.epsilons:
        n = plan.cells_for(eps)
        if n > plan.n_cap:
            msg = f"eps={eps:g} needs n={n} > cap {plan.n_cap}; dropped"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            rep.notes.append(msg)
            continue
        params = plan.params(eps)
        try:
            if n not in cache:
                cache[n] = build_profiles(params, n, plan)
            ps = cache[n]
            traj = solve_full(params, ps.data, ps.stepper)
        except SolverError as exc:
            rep.incomplete = True
            rep.error = f"eps={eps:g}: {exc}"
            log.error(rep.error)
            break
        o = ps.outer
        a1 = assemble(1, o, ps.left, ps.right, eps)
        af = assemble("full", o, ps.left, ps.right, eps)
        rem = compute_remainders(traj, a1)
        thick = measure_thickness(traj.v[-1], o.v[-1], ps.data.grid.nodes, eps, plan.threshold)
        amp = abs(traj.v[-1, 0] - o.v[-1, 0])
        bres_l, _ = boundary_value_check([traj.u[:, 0]], [(o.u[:, 0], o.v[:, 0])], plan.v_star)
        bres_r, _ = boundary_value_check([traj.u[:, -1]], [(o.u[:, -1], o.v[:, -1])], plan.v_star)
        ic = interior_check(traj.u, o.u, traj.v, o.v, ps.data.grid.nodes, plan.delta)
        art = RunArtifacts(params, ps, traj, af)
        for entry in invariant_battery(art):
            rep.ledger.append(entry)
        row = {
            "epsilon": eps, "n": n, "dt": ps.stepper.dt,
            "E_u": rem.E_u, "E_v": rem.E_v, "E_phi": rem.E_phi, "E_phix": rem.E_phix,
            "thickness_left": thick[0], "thickness_right": thick[1],
            "boundary_residual": float(bres_l[0]), "boundary_residual_right": float(bres_r[0]),
            "wall_amplitude": float(amp),
            "outer_gap_T": float(abs(plan.v_star - o.v[-1, 0])),
        }
        row.update(ic)
        rep.rows.append(row)
        eps_used.append(eps)
        u_walls.append(traj.u[:, 0])
        outer_walls.append((o.u[:, 0], o.v[:, 0]))
        last = (traj, o)
        if keep_artifacts:
            rep.artifacts.append(art)
        if progress:
            progress(row)
    if len(eps_used) >= 3:
        for name in ("E_u", "E_v", "E_phi", "E_phix", "boundary_residual", "thickness_left", "thickness_right"):
            rep.fits[name] = _try_fit(eps_used, rep.column(name), name, rep.notes)
    else:
        rep.notes.append(f"{len(eps_used)} eps value(s): slopes absent")
        warnings.warn("fewer than three eps values; slopes absent", RuntimeWarning, stacklevel=2)
        for name in ("E_u", "E_v", "E_phi", "E_phix", "boundary_residual", "thickness_left", "thickness_right"):
            rep.fits[name] = None
    if last is not None:
        traj, o = last
        rep.interior = dict(rep.rows[-1])
        rep.interior["floor_v"] = 0.25 * abs(plan.v_star - o.v[-1, 0])
    return rep


def self_convergence(params: ModelParams, n: int, dt: float, probes=(0.125, 0.25, 0.5), levels: int = 3,
                     n_out: int = 1):
    """Successive differences of the full solution at ``T`` under joint (n, dt) halving.

    Returns ``(ratios_u, ratios_v)``: for each probe, ``|f_n - f_2n| / |f_2n - f_4n|``
    (nominally 4 for a second-order method).
    """
    vals_u, vals_v = [], []
    for k in range(levels):
        nk = n * 2 ** k
        grid = make_interval_grid(nk)
        data = build_initial_data(params.preset, params, grid)
        st = make_stepper(grid, params.T, n_out=n_out, dt=dt / 2 ** k)
        tr = solve_full(params, data, st)
        idx = [int(round(p * nk)) for p in probes]
        vals_u.append(tr.u[-1, idx])
        vals_v.append(tr.v[-1, idx])
    ru = np.abs(vals_u[0] - vals_u[1]) / np.abs(vals_u[1] - vals_u[2])
    rv = np.abs(vals_v[0] - vals_v[1]) / np.abs(vals_v[1] - vals_v[2])
    return ru, rv
