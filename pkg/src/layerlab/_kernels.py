"""Low-level array helpers used inside the time marches.

Two interchangeable implementations live here: explicit loops compiled by numba,
and vectorised numpy/scipy versions for the fallback backend. The march code in
:mod:`layerlab._march` only calls the names exported at the bottom, so it runs
unchanged on either backend.
"""

import numpy as np

from ._accel import USE_NUMBA, jit

# ---------------------------------------------------------------------------
# numba variants (plain loops)
# ---------------------------------------------------------------------------


def _tri_solve_loop(a, b, c, d):
    # a[0] and c[-1] are ignored
    n = d.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = c[0] / b[0]
    dp[0] = d[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / m
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _tri_factor_loop(a, b, c):
    n = b.shape[0]
    cp = np.empty(n)
    inv = np.empty(n)
    inv[0] = 1.0 / b[0]
    cp[0] = c[0] * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (b[i] - a[i] * cp[i - 1])
        cp[i] = c[i] * inv[i]
    return (a.copy(), cp, inv)


def _tri_solve_factored_loop(fac, d):
    a, cp, inv = fac
    n = d.shape[0]
    x = np.empty(n)
    x[0] = d[0] * inv[0]
    for i in range(1, n):
        x[i] = (d[i] - a[i] * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return x


def _chem_div_loop(u, v, h, w):
    # divergence of the flux -u (v_x) with zero flux at both walls, per unit length
    n = u.shape[0]
    out = np.zeros(n)
    for i in range(n - 1):
        flux = -0.5 * (u[i] + u[i + 1]) * (v[i + 1] - v[i]) / h[i]
        out[i] += flux
        out[i + 1] -= flux
    for i in range(n):
        out[i] /= w[i]
    return out


def _stiff_loop(f, h):
    # sum of one-sided differences (f_{i+1}-f_i)/h_i - (f_i-f_{i-1})/h_{i-1}
    n = f.shape[0]
    out = np.zeros(n)
    for i in range(n - 1):
        g = (f[i + 1] - f[i]) / h[i]
        out[i] += g
        out[i + 1] -= g
    return out


def _deriv_loop(f, cm, c0, cp, e0, e1):
    n = f.shape[0]
    out = np.empty(n)
    out[0] = e0[0] * f[0] + e0[1] * f[1] + e0[2] * f[2]
    for i in range(1, n - 1):
        out[i] = cm[i] * f[i - 1] + c0[i] * f[i] + cp[i] * f[i + 1]
    out[n - 1] = e1[0] * f[n - 1] + e1[1] * f[n - 2] + e1[2] * f[n - 3]
    return out


def _tail_trapz_loop(f, dz):
    # T_j = integral of f from z_j to z_m on a uniform grid
    n = f.shape[0]
    out = np.empty(n)
    out[n - 1] = 0.0
    for j in range(n - 2, -1, -1):
        out[j] = out[j + 1] + 0.5 * dz * (f[j] + f[j + 1])
    return out


def _trapz_loop(f, dz):
    s = 0.0
    n = f.shape[0]
    for j in range(n - 1):
        s += 0.5 * dz * (f[j] + f[j + 1])
    return s


# ---------------------------------------------------------------------------
# numpy variants (vectorised)
# ---------------------------------------------------------------------------


def _banded(a, b, c):
    ab = np.zeros((3, b.shape[0]))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    return ab


def _tri_solve_np(a, b, c, d):
    from scipy.linalg import solve_banded

    return solve_banded((1, 1), _banded(a, b, c), d, check_finite=False)


def _tri_factor_np(a, b, c):
    return _banded(a, b, c)


def _tri_solve_factored_np(fac, d):
    from scipy.linalg import solve_banded

    return solve_banded((1, 1), fac, d, check_finite=False)


def _chem_div_np(u, v, h, w):
    flux = -0.5 * (u[:-1] + u[1:]) * np.diff(v) / h
    out = np.zeros_like(u)
    out[:-1] += flux
    out[1:] -= flux
    return out / w


def _stiff_np(f, h):
    g = np.diff(f) / h
    out = np.zeros_like(f)
    out[:-1] += g
    out[1:] -= g
    return out


def _deriv_np(f, cm, c0, cp, e0, e1):
    out = np.empty_like(f)
    out[1:-1] = cm[1:-1] * f[:-2] + c0[1:-1] * f[1:-1] + cp[1:-1] * f[2:]
    out[0] = e0[0] * f[0] + e0[1] * f[1] + e0[2] * f[2]
    out[-1] = e1[0] * f[-1] + e1[1] * f[-2] + e1[2] * f[-3]
    return out


def _tail_trapz_np(f, dz):
    seg = 0.5 * dz * (f[1:] + f[:-1])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


def _trapz_np(f, dz):
    return float(0.5 * dz * np.sum(f[1:] + f[:-1]))


if USE_NUMBA:
    tri_solve = jit(_tri_solve_loop)
    tri_factor = jit(_tri_factor_loop)
    tri_solve_factored = jit(_tri_solve_factored_loop)
    chem_div = jit(_chem_div_loop)
    stiff = jit(_stiff_loop)
    deriv = jit(_deriv_loop)
    tail_trapz = jit(_tail_trapz_loop)
    trapz = jit(_trapz_loop)
else:
    tri_solve = _tri_solve_np
    tri_factor = _tri_factor_np
    tri_solve_factored = _tri_solve_factored_np
    chem_div = _chem_div_np
    stiff = _stiff_np
    deriv = _deriv_np
    tail_trapz = _tail_trapz_np
    trapz = _trapz_np


def deriv_coefficients(x):
    """Second-order three-point first-derivative weights on a (possibly graded) node set.

    Returns ``(cm, c0, cp, e0, e1)``: interior weights for ``f[i-1], f[i], f[i+1]``
    and one-sided weights at the left end (``f[0], f[1], f[2]``) and the right end
    (``f[n], f[n-1], f[n-2]``).
    """
    x = np.asarray(x, dtype=float)
    h = np.diff(x)
    n = x.shape[0]
    cm = np.zeros(n)
    c0 = np.zeros(n)
    cp = np.zeros(n)
    hm = h[:-1]
    hp = h[1:]
    cm[1:-1] = -hp / (hm * (hm + hp))
    c0[1:-1] = (hp - hm) / (hm * hp)
    cp[1:-1] = hm / (hp * (hm + hp))
    h0, h1 = h[0], h[1]
    e0 = np.array([-(2 * h0 + h1) / (h0 * (h0 + h1)), (h0 + h1) / (h0 * h1), -h0 / (h1 * (h0 + h1))])
    hn, hq = h[-1], h[-2]
    e1 = np.array([(2 * hn + hq) / (hn * (hn + hq)), -(hn + hq) / (hn * hq), hn / (hq * (hn + hq))])
    return cm, c0, cp, e0, e1
