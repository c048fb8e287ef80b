"""Numeric hot paths with two interchangeable backends.

The default backend JIT-compiles the kernels with numba. Setting the
environment variable ``COVERTLINK_DISABLE_NUMBA=1`` (or any value other than
``0``/empty) before import selects the pure-numpy fallback, which produces the
same results within floating-point noise. ``BACKEND`` records the choice.

Both backends stay importable (``*_py`` / ``*_np`` are the sources, ``*_nb``
the compiled variants when numba is active) so they can be benchmarked against
each other; see ``benchmarks/bench_backends.py``.
"""

from __future__ import annotations

import math
import os

import numpy as np

_J0_SERIES_CUTOFF = 12.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _env_disables_numba() -> bool:
    raw = os.environ.get("COVERTLINK_DISABLE_NUMBA", "")
    return raw not in ("", "0")


# ---------------------------------------------------------------------------
# Bessel J0: power series below the cutoff, Hankel asymptotic expansion above.
# ---------------------------------------------------------------------------

def _j0_scalar_py(x: float) -> float:
    x = abs(x)
    if x <= _J0_SERIES_CUTOFF:
        # sum_k (-x^2/4)^k / (k!)^2
        q = -0.25 * x * x
        term = 1.0
        total = 1.0
        for k in range(1, 200):
            term *= q / (k * k)
            total += term
            if abs(term) < 1e-18:
                break
        return total
    # J0(x) ~ sqrt(2/(pi x)) (P cos w - Q sin w), w = x - pi/4, with the
    # coefficient recurrence v_m = v_{m-1} * -(2m-1)^2 / (8 m x); the series
    # is truncated at its smallest term.
    p = 1.0
    q = 0.0
    v = 1.0
    sp = -1.0
    sq = 1.0
    for m in range(1, 40):
        v_next = v * ((2.0 * m - 1.0) ** 2) / (8.0 * m * x)
        if v_next >= v and m > 2:
            # smallest term reached: optimal truncation point
            break
        v = v_next
        if m % 2 == 1:
            q += sq * v
            sq = -sq
        else:
            p += sp * v
            sp = -sp
        if v < 1e-18:
            break
    w = x - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(w) + q * math.sin(w))


def _j0_array_np(xs: np.ndarray) -> np.ndarray:
    xs = np.abs(np.asarray(xs, dtype=np.float64))
    out = np.empty_like(xs)
    small = xs <= _J0_SERIES_CUTOFF
    if np.any(small):
        x = xs[small]
        q = -0.25 * x * x
        term = np.ones_like(x)
        total = np.ones_like(x)
        for k in range(1, 200):
            term = term * q / (k * k)
            total += term
            if np.max(np.abs(term)) < 1e-18:
                break
        out[small] = total
    if np.any(~small):
        x = xs[~small]
        p = np.ones_like(x)
        q = np.zeros_like(x)
        v = np.ones_like(x)
        active = np.ones_like(x, dtype=bool)
        sp = -1.0
        sq = 1.0
        for m in range(1, 40):
            v_next = v * ((2.0 * m - 1.0) ** 2) / (8.0 * m * x)
            if m > 2:
                # freeze elements past their smallest (optimal) term
                active &= v_next < v
            contrib = np.where(active, v_next, 0.0)
            v = np.where(active, v_next, v)
            if m % 2 == 1:
                q += sq * contrib
                sq = -sq
            else:
                p += sp * contrib
                sp = -sp
            if not np.any(active) or np.max(contrib) < 1e-18:
                break
        w = x - 0.25 * np.pi
        out[~small] = np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(w) + q * np.sin(w))
    return out


# ---------------------------------------------------------------------------
# Lower-bound detection-error curve and its bracketed minimisation.
#
# Parameterisation relative to the bracket floor tau_min:
#   nu1 = -s1 (tau - tau_min),  nu2 = s2 (tau - tau_min),  nu3 = nu2 + 2 lam3,
#   nu5 = 2 lam3 (phi1 nu2 nu3 + nu2 + nu3) / nu3^2,
#   xi_lb = theta - exp(nu1) (exp_phi5 nu5 - 1 + theta).
# ---------------------------------------------------------------------------

def _xi_lb_curve_py(taus, tau_min, s1, s2, lam3, phi1, exp_phi5, theta):
    out = np.empty_like(taus)
    for i in range(taus.shape[0]):
        nu2 = s2 * (taus[i] - tau_min)
        nu3 = nu2 + 2.0 * lam3
        nu5 = 2.0 * lam3 * (phi1 * nu2 * nu3 + nu2 + nu3) / (nu3 * nu3)
        out[i] = theta - math.exp(-s1 * (taus[i] - tau_min)) * (
            exp_phi5 * nu5 - 1.0 + theta)
    return out


def _xi_lb_curve_np(taus, tau_min, s1, s2, lam3, phi1, exp_phi5, theta):
    nu2 = s2 * (taus - tau_min)
    nu3 = nu2 + 2.0 * lam3
    nu5 = 2.0 * lam3 * (phi1 * nu2 * nu3 + nu2 + nu3) / (nu3 * nu3)
    return theta - np.exp(-s1 * (taus - tau_min)) * (exp_phi5 * nu5 - 1.0 + theta)


def _scan_optimal_tau_py(tau_min, tau_max, n_grid, s1, s2, lam3, phi1,
                         exp_phi5, theta, refine_frac):
    """Uniform grid over [tau_min, tau_max] plus golden-section refinement
    around the best grid point, down to a bracket of refine_frac * span."""

    def f(tau):
        nu2 = s2 * (tau - tau_min)
        nu3 = nu2 + 2.0 * lam3
        nu5 = 2.0 * lam3 * (phi1 * nu2 * nu3 + nu2 + nu3) / (nu3 * nu3)
        return theta - math.exp(-s1 * (tau - tau_min)) * (
            exp_phi5 * nu5 - 1.0 + theta)

    span = tau_max - tau_min
    step = span / (n_grid - 1)
    best_i = 0
    best_v = f(tau_min)
    for i in range(1, n_grid):
        v = f(tau_min + step * i)
        if v < best_v:
            best_v = v
            best_i = i
    lo = tau_min + step * (best_i - 1) if best_i > 0 else tau_min
    hi = tau_min + step * (best_i + 1) if best_i < n_grid - 1 else tau_max
    tol = refine_frac * span
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc = f(c)
    fd = f(d)
    while hi - lo > tol:
        if fc < fd:
            hi = d
            d = c
            fd = fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    t_star = 0.5 * (lo + hi)
    v_star = f(t_star)
    if best_v < v_star:
        return tau_min + step * best_i, best_v
    return t_star, v_star


# ---------------------------------------------------------------------------
# Monte Carlo block tallies (asymptotic detector).
#
# Inputs are squared magnitudes of the per-block complex draws. Returns the
# event counters (n_h1, n_ar, n_rb, n_fa, n_md) for one detection threshold.
# ---------------------------------------------------------------------------

def _block_tallies_py(est2_ar, est2_rb, omg2_ar, omg2_rb, err2_ar, err2_rb,
                      war2_a, war2_r, war2_b, p_max, n0, q_c, rho2_ar, rho2_rb,
                      snr_min, ld_over_l, phi4, tau):
    n_h1 = 0
    n_ar = 0
    n_rb = 0
    n_fa = 0
    n_md = 0
    for i in range(est2_ar.shape[0]):
        if est2_ar[i] * p_max >= q_c and est2_rb[i] * p_max >= q_c:
            n_h1 += 1
            sinr_ar = q_c * rho2_ar / (
                q_c * ((1.0 - rho2_ar) * omg2_ar[i] + err2_ar[i]) / est2_ar[i] + n0)
            sinr_rb = q_c * rho2_rb / (
                q_c * ((1.0 - rho2_rb) * omg2_rb[i] + err2_rb[i]) / est2_rb[i] + n0)
            if sinr_ar > snr_min:
                n_ar += 1
            if sinr_rb > snr_min:
                n_rb += 1
            stat = phi4 + n0 + ld_over_l * q_c * (
                war2_a[i] / est2_ar[i] + war2_r[i] / est2_rb[i])
            if stat <= tau:
                n_md += 1
        else:
            stat = phi4 + n0 + ld_over_l * p_max * war2_b[i]
            if stat > tau:
                n_fa += 1
    return n_h1, n_ar, n_rb, n_fa, n_md


def _block_tallies_np(est2_ar, est2_rb, omg2_ar, omg2_rb, err2_ar, err2_rb,
                      war2_a, war2_r, war2_b, p_max, n0, q_c, rho2_ar, rho2_rb,
                      snr_min, ld_over_l, phi4, tau):
    h1 = (est2_ar * p_max >= q_c) & (est2_rb * p_max >= q_c)
    n_h1 = int(np.count_nonzero(h1))
    sinr_ar = q_c * rho2_ar / (
        q_c * ((1.0 - rho2_ar) * omg2_ar + err2_ar) / est2_ar + n0)
    sinr_rb = q_c * rho2_rb / (
        q_c * ((1.0 - rho2_rb) * omg2_rb + err2_rb) / est2_rb + n0)
    n_ar = int(np.count_nonzero(h1 & (sinr_ar > snr_min)))
    n_rb = int(np.count_nonzero(h1 & (sinr_rb > snr_min)))
    stat_h1 = phi4 + n0 + ld_over_l * q_c * (war2_a / est2_ar + war2_r / est2_rb)
    stat_h0 = phi4 + n0 + ld_over_l * p_max * war2_b
    n_md = int(np.count_nonzero(h1 & (stat_h1 <= tau)))
    n_fa = int(np.count_nonzero(~h1 & (stat_h0 > tau)))
    return n_h1, n_ar, n_rb, n_fa, n_md


# ---------------------------------------------------------------------------
# Backend selection.
# ---------------------------------------------------------------------------

_HAVE_NUMBA = False
if not _env_disables_numba():
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

if _HAVE_NUMBA:
    _j0_scalar_nb = njit(cache=True)(_j0_scalar_py)

    @njit(cache=True)
    def _j0_array_nb(xs):
        out = np.empty_like(xs)
        for i in range(xs.shape[0]):
            out[i] = _j0_scalar_nb(xs[i])
        return out

    _xi_lb_curve_nb = njit(cache=True)(_xi_lb_curve_py)
    _scan_optimal_tau_nb = njit(cache=True)(_scan_optimal_tau_py)
    _block_tallies_nb = njit(cache=True)(_block_tallies_py)

    BACKEND = "numba"
    _j0_array = _j0_array_nb
    _xi_lb_curve_impl = _xi_lb_curve_nb
    _scan_optimal_tau_impl = _scan_optimal_tau_nb
    _block_tallies_impl = _block_tallies_nb
else:
    BACKEND = "numpy"
    _j0_array = _j0_array_np
    _xi_lb_curve_impl = _xi_lb_curve_np
    _scan_optimal_tau_impl = _scan_optimal_tau_py
    _block_tallies_impl = _block_tallies_np


def j0(x):
    """Bessel function of the first kind, order zero.

    Absolute error is below 1e-10 for |x| <= 50. Accepts scalars or arrays.
    """
    arr = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    out = _j0_array(arr)
    if np.ndim(x) == 0:
        return float(out[0])
    return out


def xi_lb_curve(taus, tau_min, s1, s2, lam3, phi1, exp_phi5, theta):
    """Lower-bound detection-error values on an array of thresholds."""
    taus = np.ascontiguousarray(taus, dtype=np.float64)
    return _xi_lb_curve_impl(taus, tau_min, s1, s2, lam3, phi1, exp_phi5, theta)


def scan_optimal_tau(tau_min, tau_max, n_grid, s1, s2, lam3, phi1, exp_phi5,
                     theta, refine_frac=1e-6):
    """Minimise the lower-bound curve over [tau_min, tau_max]; returns
    (tau_star, value)."""
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    t, v = _scan_optimal_tau_impl(
        float(tau_min), float(tau_max), int(n_grid), s1, s2, lam3, phi1,
        exp_phi5, theta, refine_frac)
    return float(t), float(v)


def block_tallies(est2_ar, est2_rb, omg2_ar, omg2_rb, err2_ar, err2_rb,
                  war2_a, war2_r, war2_b, p_max, n0, q_c, rho2_ar, rho2_rb,
                  snr_min, ld_over_l, phi4, tau):
    """Event counters for one batch of blocks at a single threshold."""
    return _block_tallies_impl(
        est2_ar, est2_rb, omg2_ar, omg2_rb, err2_ar, err2_rb,
        war2_a, war2_r, war2_b, p_max, n0, q_c, rho2_ar, rho2_rb,
        snr_min, ld_over_l, phi4, tau)
