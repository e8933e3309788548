"""Time marches for the interval and half-line problems.

Every function here is compiled by numba when that backend is active; with the
numpy backend they run as Python loops over vectorised helpers. Failures are
reported through an integer status (0 ok, 1 nonfinite, 2 negative density,
3 layer bracket violated) together with the offending step index, so the
compiled code never raises.
"""

import numpy as np

from ._accel import jit
from ._kernels import chem_div, deriv, stiff, tail_trapz, trapz, tri_factor, tri_solve, tri_solve_factored

OK = 0
NONFINITE = 1
NEGATIVE_DENSITY = 2
BRACKET = 3

# rows of the per-step trace table produced by march_outer
TRACE_ROWS = (
    "u_left", "u_right", "v_left", "v_right",
    "vx_left", "vx_right", "ux_left", "ux_right",
    "phi1x_left", "phi1x_right", "v1_left", "v1_right",
)


@jit
def _neumann_matrix(h, w, coef):
    n = w.shape[0]
    a = np.zeros(n)
    b = w.copy()
    c = np.zeros(n)
    for i in range(n - 1):
        g = coef / h[i]
        b[i] += g
        b[i + 1] += g
        c[i] = -g
        a[i + 1] = -g
    return a, b, c


@jit
def _dirichlet_matrix(h, w, coef):
    a, b, c = _neumann_matrix(h, w, coef)
    n = w.shape[0]
    a[0] = 0.0
    b[0] = 1.0
    c[0] = 0.0
    a[n - 1] = 0.0
    b[n - 1] = 1.0
    c[n - 1] = 0.0
    return a, b, c


@jit
def _phi1(y):
    # (1 - exp(-y)) / y, continuous at 0
    out = np.empty_like(y)
    for i in range(y.shape[0]):
        if abs(y[i]) < 1e-12:
            out[i] = 1.0 - 0.5 * y[i]
        else:
            out[i] = -np.expm1(-y[i]) / y[i]
    return out


@jit
def _strang_v(fac, h, w, v, ua, ub, eps, v_star, dt):
    # half reaction, Crank-Nicolson diffusion with Dirichlet walls, half reaction
    n = v.shape[0]
    y = v.copy()
    y[1:n - 1] = v[1:n - 1] + v[1:n - 1] * np.expm1(-0.5 * dt * ua[1:n - 1])
    y[0] = v_star
    y[n - 1] = v_star
    rhs = w * y + 0.5 * dt * eps * stiff(y, h)
    rhs[0] = v_star
    rhs[n - 1] = v_star
    z = tri_solve_factored(fac, rhs)
    z[1:n - 1] = z[1:n - 1] + z[1:n - 1] * np.expm1(-0.5 * dt * ub[1:n - 1])
    z[0] = v_star
    z[n - 1] = v_star
    return z


@jit
def march_full(h, w, u0, v0, eps, v_star, dt, n_out, spo, neg_tol):
    """Full system with eps > 0; Heun-corrected IMEX for u, Strang splitting for v."""
    n = u0.shape[0]
    au, bu, cu = _neumann_matrix(h, w, 0.5 * dt)
    facu = tri_factor(au, bu, cu)
    av, bv, cv = _dirichlet_matrix(h, w, 0.5 * dt * eps)
    facv = tri_factor(av, bv, cv)
    u = u0.copy()
    v = v0.copy()
    u_out = np.empty((n_out + 1, n))
    v_out = np.empty((n_out + 1, n))
    u_out[0] = u
    v_out[0] = v
    mass0 = np.sum(w * u)
    drift = 0.0
    umin = np.min(u)
    vmin = np.min(v)
    vmax = np.max(v)
    status = OK
    fail = -1
    for k in range(n_out * spo):
        cn = chem_div(u, v, h, w)
        ku = dt * stiff(u, h)
        us = u + tri_solve_factored(facu, ku + dt * w * cn)
        vs = _strang_v(facv, h, w, v, u, us, eps, v_star, dt)
        cs = chem_div(us, vs, h, w)
        un = u + tri_solve_factored(facu, ku + 0.5 * dt * w * (cn + cs))
        vn = _strang_v(facv, h, w, v, u, un, eps, v_star, dt)
        u = un
        v = vn
        if not np.isfinite(np.sum(u) + np.sum(v)):
            status = NONFINITE
            fail = k + 1
            break
        drift = max(drift, abs(np.sum(w * u) - mass0))
        umin = min(umin, np.min(u))
        vmin = min(vmin, np.min(v))
        vmax = max(vmax, np.max(v))
        if umin < -neg_tol:
            status = NEGATIVE_DENSITY
            fail = k + 1
            break
        if (k + 1) % spo == 0:
            j = (k + 1) // spo
            u_out[j] = u
            v_out[j] = v
    return u_out, v_out, mass0, drift, umin, vmin, vmax, status, fail


@jit
def _record(tr, k, u, v, du, dv, dphi1, v1):
    n = u.shape[0]
    tr[0, k] = u[0]
    tr[1, k] = u[n - 1]
    tr[2, k] = v[0]
    tr[3, k] = v[n - 1]
    tr[4, k] = dv[0]
    tr[5, k] = dv[n - 1]
    tr[6, k] = du[0]
    tr[7, k] = du[n - 1]
    tr[8, k] = dphi1[0]
    tr[9, k] = dphi1[n - 1]
    tr[10, k] = v1[0]
    tr[11, k] = v1[n - 1]


@jit
def march_outer(h, w, cm, c0, cp, e0, e1, u0, v0, dt, n_out, spo, neg_tol, first_order, g0, g1):
    """Zero-diffusion problem, optionally with the first-order outer pair in lockstep.

    ``g0``/``g1`` hold the Dirichlet data of the first-order potential at every step.
    ``iu_out`` accumulates the trapezoid time integral of u, step by step.
    """
    n = u0.shape[0]
    nsteps = n_out * spo
    au, bu, cu = _neumann_matrix(h, w, 0.5 * dt)
    facu = tri_factor(au, bu, cu)
    ap, bp, cp_ = _dirichlet_matrix(h, w, 0.5 * dt)
    facp = tri_factor(ap, bp, cp_)
    u = u0.copy()
    v = v0.copy()
    p1 = np.zeros(n)
    v1 = np.zeros(n)
    if first_order:
        p1[0] = g0[0]
        p1[n - 1] = g1[0]
    u_out = np.empty((n_out + 1, n))
    v_out = np.empty((n_out + 1, n))
    p1_out = np.zeros((n_out + 1, n))
    v1_out = np.zeros((n_out + 1, n))
    u_out[0] = u
    v_out[0] = v
    p1_out[0] = p1
    iu = np.zeros(n)
    vcomp = np.zeros(n)
    iu_out = np.zeros((n_out + 1, n))
    tr = np.zeros((12, nsteps + 1))
    du = deriv(u, cm, c0, cp, e0, e1)
    dv = deriv(v, cm, c0, cp, e0, e1)
    dp = deriv(p1, cm, c0, cp, e0, e1)
    _record(tr, 0, u, v, du, dv, dp, v1)
    mass0 = np.sum(w * u)
    drift = 0.0
    umin = np.min(u)
    status = OK
    fail = -1
    for k in range(nsteps):
        cn = chem_div(u, v, h, w)
        ku = dt * stiff(u, h)
        us = u + tri_solve_factored(facu, ku + dt * w * cn)
        vs = v + v * np.expm1(-0.5 * dt * (u + us))
        cs = chem_div(us, vs, h, w)
        un = u + tri_solve_factored(facu, ku + 0.5 * dt * w * (cn + cs))
        # compensated sum: the per-step decrement is ~1e-11 of v, so plain
        # rounding would accumulate a bias linear in the step count
        dec = v * np.expm1(-0.5 * dt * (u + un)) - vcomp
        vn = v + dec
        vcomp = (vn - v) - dec
        dun = deriv(un, cm, c0, cp, e0, e1)
        dvn = deriv(vn, cm, c0, cp, e0, e1)
        if first_order:
            dv1 = deriv(v1, cm, c0, cp, e0, e1)
            en = -u * dv1 - dp * dv
            fn = -dp * v
            a = 0.5 * (u + un)
            decay = np.exp(-a * dt)
            gain = dt * _phi1(a * dt)
            pbase = w * p1 + 0.5 * dt * stiff(p1, h)
            rhs = pbase + dt * w * en
            rhs[0] = g0[k + 1]
            rhs[n - 1] = g1[k + 1]
            ps = tri_solve_factored(facp, rhs)
            v1s = v1 * decay + gain * fn
            dps = deriv(ps, cm, c0, cp, e0, e1)
            es = -un * deriv(v1s, cm, c0, cp, e0, e1) - dps * dvn
            fs = -dps * vn
            rhs = pbase + 0.5 * dt * w * (en + es)
            rhs[0] = g0[k + 1]
            rhs[n - 1] = g1[k + 1]
            p1 = tri_solve_factored(facp, rhs)
            v1 = v1 * decay + gain * 0.5 * (fn + fs)
            dp = deriv(p1, cm, c0, cp, e0, e1)
        iu += 0.5 * dt * (u + un)
        u = un
        v = vn
        du = dun
        dv = dvn
        _record(tr, k + 1, u, v, du, dv, dp, v1)
        if not np.isfinite(np.sum(u) + np.sum(v) + np.sum(p1) + np.sum(v1)):
            status = NONFINITE
            fail = k + 1
            break
        drift = max(drift, abs(np.sum(w * u) - mass0))
        umin = min(umin, np.min(u))
        if umin < -neg_tol:
            status = NEGATIVE_DENSITY
            fail = k + 1
            break
        if (k + 1) % spo == 0:
            j = (k + 1) // spo
            u_out[j] = u
            v_out[j] = v
            p1_out[j] = p1
            v1_out[j] = v1
            iu_out[j] = iu
    return u_out, v_out, p1_out, v1_out, iu_out, tr, mass0, drift, umin, status, fail


@jit
def layer_order2_terms(z, dz, v0, v1, a, b, q, r, sx, vi1):
    """Coefficients of the second-order layer problem at one time level.

    Returns ``(kappa, source, nonlocal_kernel, tail_source)`` with the linear
    decay rate, the v1-independent source, the derivative of (a + u_layer) e^{-v0}
    entering the nonlocal term, and the tail integral of the source density.
    """
    ev = np.exp(v0)
    ul = a * np.expm1(v0)
    p = a + ul
    wv = b + v0
    dv0 = np.empty_like(v0)
    m = v0.shape[0]
    dv0[1:m - 1] = (v0[2:] - v0[:m - 2]) / (2.0 * dz)
    dv0[0] = (-3.0 * v0[0] + 4.0 * v0[1] - v0[2]) / (2.0 * dz)
    dv0[m - 1] = (3.0 * v0[m - 1] - 4.0 * v0[m - 2] + v0[m - 3]) / (2.0 * dz)
    dens = (dv0 * (q * z + r) + ul * sx) / ev
    tail = tail_trapz(dens, dz)
    source = ev * tail * wv - ul * (sx * z + vi1) - (q * z + r) * v0
    pe = p / ev
    kern = np.empty_like(v0)
    kern[1:m - 1] = (pe[2:] - pe[:m - 2]) / (2.0 * dz)
    kern[0] = (-3.0 * pe[0] + 4.0 * pe[1] - pe[2]) / (2.0 * dz)
    kern[m - 1] = (3.0 * pe[m - 1] - 4.0 * pe[m - 2] + pe[m - 3]) / (2.0 * dz)
    kappa = a + p * wv + ul
    return kappa, source, kern, tail


@jit
def march_layer(z, a, b, v_star, dt, n_out, spo, order2, q, r, sx, vi1, slack):
    """Backward-Euler march of the leading layer profile and, optionally, the second-order one.

    All coefficient arrays are sampled on the layer time mesh (length ``n_out*spo + 1``)
    and written in left-wall orientation.
    """
    m1 = z.shape[0]
    dz = z[1] - z[0]
    rr = dt / (dz * dz)
    nsteps = n_out * spo
    v0 = np.zeros(m1)
    v1 = np.zeros(m1)
    v0_out = np.zeros((n_out + 1, m1))
    v1_out = np.zeros((n_out + 1, m1))
    phi1_trace = np.zeros(nsteps + 1)
    lo = np.full(m1, -rr)
    vmin = 0.0
    vmax = 0.0
    status = OK
    fail = -1
    for k in range(nsteps):
        ak = a[k + 1]
        bk = b[k + 1]
        diag = 1.0 + 2.0 * rr + dt * ak * np.exp(v0)
        rhs = v0 - dt * ak * bk * np.expm1(v0)
        diag[0] = 1.0
        diag[m1 - 1] = 1.0
        rhs[0] = v_star - bk
        rhs[m1 - 1] = 0.0
        lo_ = lo.copy()
        up_ = lo.copy()
        lo_[m1 - 1] = 0.0
        up_[0] = 0.0
        v0n = tri_solve(lo_, diag, up_, rhs)
        if order2:
            kappa, source, kern, tail = layer_order2_terms(z, dz, v0n, v1, ak, bk, q[k + 1], r[k + 1], sx[k + 1], vi1[k + 1])
            nonlocal_term = np.exp(v0n) * tail_trapz(v1 * kern, dz) * (bk + v0n)
            d2 = 1.0 + 2.0 * rr + dt * kappa
            rhs2 = v1 + dt * (source - nonlocal_term)
            d2[0] = 1.0
            d2[m1 - 1] = 1.0
            rhs2[0] = -vi1[k + 1]
            rhs2[m1 - 1] = 0.0
            v1 = tri_solve(lo_, d2, up_, rhs2)
        v0 = v0n
        phi1_trace[k + 1] = -ak * trapz(np.expm1(v0), dz)
        if not np.isfinite(np.sum(v0) + np.sum(v1)):
            status = NONFINITE
            fail = k + 1
            break
        vmin = min(vmin, np.min(v0))
        vmax = max(vmax, np.max(v0))
        if vmin < -slack or vmax > v_star + slack:
            status = BRACKET
            fail = k + 1
            break
        if (k + 1) % spo == 0:
            j = (k + 1) // spo
            v0_out[j] = v0
            v1_out[j] = v1
    return v0_out, v1_out, phi1_trace, vmin, vmax, status, fail
