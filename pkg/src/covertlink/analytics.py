"""Closed-form performance expressions: end-to-end success probability,
radiometer false-alarm/miss-detection, detection error probability (DEP) with
its compact lower bound, the optimal-threshold bracket and search, covert
rate, and the inversion-target bounds.

Threshold conventions. tau_min = phi4 + n0 is the floor of the warden
statistic; below it the detector always fires. nu1 uses the form anchored at
tau_min, which makes the false-alarm probability continuous and equal to one
there. The lower-bound curve pairs that nu1 with the constant phi5; the
result is an affine rescaling of the exact log-free minorant (same minimiser,
still below the DEP pointwise) and can be negative near tau_min - it is a
bound function, not a probability, and is never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InfeasibleBracketError, NumericalInstabilityError
from .model import DerivedConstants, SystemConfig, correlation_coefficient, \
    estimation_error_variance, mean_feedback_delay

_GUARD = 1e-9
# relative spread below which the two fading rates are treated as equal; the
# distinct-rate branch has a (lambda1 - lambda2) denominator that cancels
# catastrophically near equality
_EQUAL_RATE_RTOL = 1e-6


@dataclass(frozen=True)
class NuFunctions:
    """The six threshold functions evaluated at one tau."""

    nu1: float
    nu2: float
    nu3: float
    nu4: float
    nu5: float
    nu6: float


@dataclass(frozen=True)
class DetectionCurve:
    """Sampled detector characteristic over a threshold grid.

    xi_lb entries below tau_min are NaN (the bound is only defined from
    tau_min up). tau_star/xi_lb_star locate the minimum of the bound inside
    [tau_min, tau_max]; xi_lb_star may be negative.
    """

    taus: np.ndarray
    p_fa: np.ndarray
    p_md: np.ndarray
    xi: np.ndarray
    xi_lb: np.ndarray
    tau_star: float
    xi_lb_star: float


def nu_functions(dc: DerivedConstants, tau: float) -> NuFunctions:
    """Evaluate nu1..nu6 at tau (tau >= tau_min for nu4 to be finite)."""
    tau_min = dc.phi4 + dc.n0
    s1 = dc.l_block / (dc.l_d * dc.p_max)
    s2 = dc.l_block / (dc.l_d * dc.q_c)
    nu1 = -s1 * (tau - tau_min)
    nu2 = s2 * (tau - tau_min)
    nu3 = nu2 + 2.0 * dc.lambda3
    nu4 = math.log(dc.lambda3 / (dc.lambda3 + nu2))
    nu5 = 2.0 * dc.lambda3 * (dc.phi1 * nu2 * nu3 + nu2 + nu3) / nu3 ** 2
    nu6 = -nu2 / dc.lambda3
    return NuFunctions(nu1=nu1, nu2=nu2, nu3=nu3, nu4=nu4, nu5=nu5, nu6=nu6)


def _hop_success_equal(phi1: float, phi2: float, lam: float, lam3: float) -> float:
    """Per-hop success with both interference rates equal to lam."""
    z = lam * phi2
    return 1.0 - math.exp(-phi1 * phi2 * lam) * lam3 * (
        lam3 + z * (2.0 + lam * phi1 * phi2 + lam3 * phi1)) / (lam3 + z) ** 2


def _hop_success_distinct(phi1: float, phi2: float, lam_a: float,
                          lam2: float, lam3: float) -> float:
    """Per-hop success with distinct interference rates lam_a != lam2."""
    if math.isinf(lam_a):
        # fully correlated hop: the innovation term vanishes
        return 1.0 - lam3 * math.exp(-phi1 * phi2 * lam2) / (lam3 + lam2 * phi2)
    t1 = math.exp(-phi1 * phi2 * lam_a) * lam2 * lam3 / (
        (lam_a - lam2) * (lam3 + lam_a * phi2))
    t2 = math.exp(-phi1 * phi2 * lam2) * lam_a * lam3 / (
        (lam2 - lam_a) * (lam3 + lam2 * phi2))
    return 1.0 + t1 + t2


def _hop_success(phi1: float, phi2: float, lam_a: float, lam2: float,
                 lam3: float) -> float:
    if phi2 <= 0.0:
        return 0.0
    if math.isfinite(lam_a) and \
            abs(lam_a - lam2) <= _EQUAL_RATE_RTOL * max(lam_a, lam2):
        return _hop_success_equal(phi1, phi2, lam2, lam3)
    return _hop_success_distinct(phi1, phi2, lam_a, lam2, lam3)


def _checked_probability(raw: float, what: str) -> float:
    if raw < -_GUARD or raw > 1.0 + _GUARD:
        raise NumericalInstabilityError(
            f"{what} evaluated to {raw!r}, outside [0,1] beyond the "
            f"{_GUARD} guard band")
    return min(1.0, max(0.0, raw))


def success_probability(dc: DerivedConstants) -> float:
    """End-to-end success probability: product of the two per-hop
    conditional success probabilities; zero when either hop's SINR ceiling
    sits below the decoding threshold."""
    if not dc.sinr_feasible:
        return 0.0
    p_r = _checked_probability(
        _hop_success(dc.phi1, dc.phi2, dc.lambda1, dc.lambda2, dc.lambda3),
        "first-hop success probability")
    p_b = _checked_probability(
        _hop_success(dc.phi1, dc.phi3, dc.lambda4, dc.lambda2, dc.lambda3),
        "second-hop success probability")
    return p_r * p_b


def tau_bounds(dc: DerivedConstants) -> tuple[float, float]:
    """Bracket [tau_min, tau_max] containing the minimiser of the DEP lower
    bound. Requires l_d >= 1 and p_max > lambda3 q_c (otherwise the upper
    bound has no positive finite value)."""
    if dc.l_d < 1:
        raise InfeasibleBracketError("threshold bracket requires l_d >= 1")
    if dc.p_max <= dc.lambda3 * dc.q_c:
        raise InfeasibleBracketError(
            f"p_max={dc.p_max} must exceed lambda3*q_c={dc.lambda3 * dc.q_c}")
    tau_min = dc.phi4 + dc.n0
    tau_max = 2.0 * dc.l_d * (
        dc.lambda3 ** 2 * dc.q_c ** 2 + dc.lambda3 * dc.p_max * dc.q_c
        - dc.p_max ** 2) / (dc.l_block * (dc.p_max - dc.lambda3 * dc.q_c)) \
        + dc.p_max + dc.n0
    return tau_min, tau_max


def false_alarm(dc: DerivedConstants, tau: float) -> float:
    """Probability the detector fires without a transmission: 1 below
    tau_min, exp(nu1) above."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    tau_min = dc.phi4 + dc.n0
    if tau < tau_min:
        return 1.0
    nu1 = -dc.l_block * (tau - tau_min) / (dc.l_d * dc.p_max)
    return _checked_probability(math.exp(nu1), "false alarm probability")


def miss_detection(dc: DerivedConstants, tau: float) -> float:
    """Probability the detector stays silent during a transmission."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    tau_min = dc.phi4 + dc.n0
    if tau < tau_min:
        return 0.0
    nu = nu_functions(dc, tau)
    lam3 = dc.lambda3
    raw = 1.0 + 2.0 * (lam3 ** 2 * (nu.nu3 * dc.phi1 + 1.0) * nu.nu4
                       - lam3 * nu.nu3) * math.exp(-nu.nu2 * dc.phi1) / nu.nu3 ** 2
    return _checked_probability(raw, "miss detection probability")


def dep(dc: DerivedConstants, tau: float) -> float:
    """Detection error probability at threshold tau: prior-weighted sum of
    false alarm and miss detection."""
    return (1.0 - dc.theta) * false_alarm(dc, tau) \
        + dc.theta * miss_detection(dc, tau)


def dep_lower_bound(dc: DerivedConstants, tau: float) -> float:
    """Log-free lower bound of the DEP, defined for tau >= tau_min.

    Not clamped: values below zero or above theta are legitimate for the
    bound function.
    """
    tau_min = dc.phi4 + dc.n0
    if tau < tau_min:
        raise ValueError(f"dep_lower_bound requires tau >= tau_min={tau_min}")
    nu = nu_functions(dc, tau)
    return dc.theta - math.exp(nu.nu1) * (
        math.exp(dc.phi5) * nu.nu5 - 1.0 + dc.theta)


def false_alarm_curve(dc: DerivedConstants, taus: np.ndarray) -> np.ndarray:
    """Vectorised false_alarm over an array of thresholds."""
    taus = np.asarray(taus, dtype=np.float64)
    tau_min = dc.phi4 + dc.n0
    s1 = dc.l_block / (dc.l_d * dc.p_max)
    return np.where(taus < tau_min, 1.0,
                    np.exp(-s1 * np.maximum(taus - tau_min, 0.0)))


def miss_detection_curve(dc: DerivedConstants, taus: np.ndarray) -> np.ndarray:
    """Vectorised miss_detection over an array of thresholds."""
    taus = np.asarray(taus, dtype=np.float64)
    tau_min = dc.phi4 + dc.n0
    s2 = dc.l_block / (dc.l_d * dc.q_c)
    lam3 = dc.lambda3
    nu2 = s2 * np.maximum(taus - tau_min, 0.0)
    nu3 = nu2 + 2.0 * lam3
    nu4 = np.log(lam3 / (lam3 + nu2))
    raw = 1.0 + 2.0 * (lam3 ** 2 * (nu3 * dc.phi1 + 1.0) * nu4
                       - lam3 * nu3) * np.exp(-nu2 * dc.phi1) / nu3 ** 2
    raw = np.where(taus < tau_min, 0.0, raw)
    bad = (raw < -_GUARD) | (raw > 1.0 + _GUARD)
    if np.any(bad):
        raise NumericalInstabilityError(
            "miss detection curve left [0,1] beyond the guard band")
    return np.clip(raw, 0.0, 1.0)


def dep_curve(dc: DerivedConstants, taus: np.ndarray) -> np.ndarray:
    """Vectorised dep over an array of thresholds."""
    return (1.0 - dc.theta) * false_alarm_curve(dc, taus) \
        + dc.theta * miss_detection_curve(dc, taus)


def dep_minimum(dc: DerivedConstants, n_grid: int = 4001) -> tuple[float, float]:
    """Locate the minimum of the true DEP over thresholds >= tau_min on a
    dense grid covering the ramp and the large-threshold asymptote.

    Works whether or not the lower-bound bracket exists. Returns
    (tau_at_min, xi_min).
    """
    tau_min = dc.phi4 + dc.n0
    scale = dc.l_d * dc.q_c / dc.l_block
    # in nu2 units the false-alarm term decays as exp(-phi1 u) and the miss
    # ramp saturates over a few lambda3, so this range reaches the asymptote
    u_hi = max(20.0 / dc.phi1, 50.0 * dc.lambda3)
    try:
        _, tau_max = tau_bounds(dc)
        u_hi = max(u_hi, 1.5 * (tau_max - tau_min) / scale)
    except InfeasibleBracketError:
        pass
    half = n_grid // 2
    u = np.concatenate([
        np.linspace(0.0, 10.0 * dc.lambda3, half, endpoint=False),
        np.geomspace(10.0 * dc.lambda3, u_hi, n_grid - half)])
    taus = tau_min + u * scale
    xi = dep_curve(dc, taus)
    i = int(np.argmin(xi))
    return float(taus[i]), float(xi[i])


def dep_lower_bound_curve(dc: DerivedConstants, taus: np.ndarray) -> np.ndarray:
    """Vectorised dep_lower_bound over an array of thresholds >= tau_min."""
    taus = np.asarray(taus, dtype=np.float64)
    tau_min = dc.phi4 + dc.n0
    if np.any(taus < tau_min):
        raise ValueError("all thresholds must be >= tau_min")
    s1 = dc.l_block / (dc.l_d * dc.p_max)
    s2 = dc.l_block / (dc.l_d * dc.q_c)
    return _kernels.xi_lb_curve(taus, tau_min, s1, s2, dc.lambda3, dc.phi1,
                                math.exp(dc.phi5), dc.theta)


def optimal_tau(dc: DerivedConstants, grid_points: int = 512) -> tuple[float, float]:
    """Minimise the DEP lower bound over [tau_min, tau_max]: uniform grid,
    then golden-section refinement to a bracket below 1e-6 of the span.
    Returns (tau_star, xi_lb_star)."""
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")
    tau_min, tau_max = tau_bounds(dc)
    s1 = dc.l_block / (dc.l_d * dc.p_max)
    s2 = dc.l_block / (dc.l_d * dc.q_c)
    return _kernels.scan_optimal_tau(
        tau_min, tau_max, grid_points, s1, s2, dc.lambda3, dc.phi1,
        math.exp(dc.phi5), dc.theta)


def detection_curve(dc: DerivedConstants, n_points: int = 512,
                    tau_lo: float | None = None,
                    tau_hi: float | None = None) -> DetectionCurve:
    """Sample the detector characteristic on a threshold grid.

    The default grid spans 0.8 tau_min to 2 tau_max, covering the flat
    always-fire region, the bracket, and the decay toward theta.
    """
    tau_min, tau_max = tau_bounds(dc)
    if tau_lo is None:
        tau_lo = 0.8 * tau_min
    if tau_hi is None:
        tau_hi = 2.0 * tau_max
    taus = np.linspace(tau_lo, tau_hi, n_points)
    p_fa = false_alarm_curve(dc, taus)
    p_md = miss_detection_curve(dc, taus)
    xi = (1.0 - dc.theta) * p_fa + dc.theta * p_md
    xi_lb = np.full_like(taus, np.nan)
    above = taus >= tau_min
    if np.any(above):
        xi_lb[above] = dep_lower_bound_curve(dc, taus[above])
    tau_star, xi_lb_star = optimal_tau(dc, max(16, n_points))
    return DetectionCurve(taus=taus, p_fa=p_fa, p_md=p_md, xi=xi,
                          xi_lb=xi_lb, tau_star=tau_star,
                          xi_lb_star=xi_lb_star)


def covert_rate(dc: DerivedConstants, p_su: float, r_ab: float) -> float:
    """Long-term time-average covert rate:
    theta * p_su * r_ab * l_d / l_block."""
    if not 0.0 <= p_su <= 1.0:
        raise ValueError("p_su must lie in [0, 1]")
    return dc.theta * p_su * r_ab * dc.l_d / dc.l_block


def qc_bounds(cfg: SystemConfig, l_d: int) -> tuple[float, float]:
    """Feasible range (q_min, q_max) of the inversion target at the given
    data-symbol count. q_max <= q_min marks an infeasible point; callers
    assign zero covert rate there."""
    if l_d < 0:
        raise ValueError("l_d must be >= 0")
    if not 0.0 < cfg.epsilon < 1.0:
        raise ValueError("qc_bounds requires epsilon in (0, 1)")
    beta = estimation_error_variance(cfg)
    delay = mean_feedback_delay(cfg, l_d)
    rho2_min = min(correlation_coefficient(cfg.f_ar, delay) ** 2,
                   correlation_coefficient(cfg.f_rb, delay) ** 2)
    snr_min = 4.0 ** cfg.r_ab - 1.0
    decode_floor = cfg.n0 * snr_min / rho2_min if rho2_min > 0 else math.inf
    q_min = max(decode_floor,
                cfg.p_max * (beta - 1.0) * math.log1p(-cfg.epsilon) / 2.0)
    q_max = cfg.p_max * (beta - 1.0) * math.log(cfg.epsilon) / 2.0
    return q_min, q_max
