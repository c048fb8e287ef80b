"""Physical-layer model: units, the J0 special function, and every derived
constant used by the closed forms downstream.

All powers are linear milliwatts internally; dBm only appears at the CLI
boundary. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq, minimize_scalar

from ._kernels import j0 as _j0

# First two zeros of J0, used only as root/extremum brackets.
_J0_ZERO_1 = 2.404825557695773
_J0_ZERO_2 = 5.520078110286311

# Fallback data-symbol cap when both hops are static (no Doppler).
STATIC_CHANNEL_LD_CAP = 100_000


@dataclass(frozen=True)
class SystemConfig:
    """User-supplied physical and protocol parameters (linear mW).

    p_max: transmit-power ceiling, mW
    n0: noise power, mW
    l_t: pilot symbols per training slot
    l_f: feedback symbols
    delta: symbol duration, seconds
    f_ar, f_rb: maximum Doppler per hop, Hz
    r_ab: required end-to-end rate, bits per channel use
    epsilon: covertness budget in [0, 1)
    """

    p_max: float
    n0: float
    l_t: int
    l_f: int
    delta: float
    f_ar: float
    f_rb: float
    r_ab: float
    epsilon: float

    def __post_init__(self):
        problems = []
        if not (self.p_max > 0):
            problems.append("p_max must be > 0")
        if not (self.n0 > 0):
            problems.append("n0 must be > 0")
        if self.l_t < 1:
            problems.append("l_t must be >= 1")
        if self.l_f < 0:
            problems.append("l_f must be >= 0")
        if not (self.delta > 0):
            problems.append("delta must be > 0")
        if self.f_ar < 0 or self.f_rb < 0:
            problems.append("Doppler frequencies must be >= 0")
        if not (self.r_ab > 0):
            problems.append("r_ab must be > 0")
        if not (0.0 <= self.epsilon < 1.0):
            problems.append("epsilon must lie in [0, 1)")
        for name in ("p_max", "n0", "delta", "f_ar", "f_rb", "r_ab", "epsilon"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            raise ValueError("invalid SystemConfig: " + "; ".join(problems))


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form constant bundle for one (q_c, l_d) operating point.

    Carries the source scalars (p_max, n0, r_ab) so downstream expressions
    need no separate config. theta is the prior probability of the
    transmission-enabled hypothesis; sinr_feasible is False when the
    interference-free SINR ceiling of either hop cannot reach the decoding
    threshold (phi2 <= 0 or phi3 <= 0), in which case success probability
    is identically zero.
    """

    q_c: float
    l_d: int
    l_block: int
    beta_star: float
    rho_ar: float
    rho_rb: float
    phi1: float
    phi2: float
    phi3: float
    phi4: float
    phi5: float
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    theta: float
    p_max: float
    n0: float
    r_ab: float

    @property
    def sinr_feasible(self) -> bool:
        return self.phi2 > 0.0 and self.phi3 > 0.0


@dataclass(frozen=True)
class PsiConstants:
    """x-coordinates bounding the monotone range of J0^2.

    psi1 is the location of the first minimum of J0; psi0 < first zero of J0
    is the matching point with |J0(psi0)| = |J0(psi1)|. J0^2 decreases
    monotonically on [0, psi0].
    """

    psi0: float
    psi1: float


def dbm_to_mw(x_dbm: float) -> float:
    """Convert dBm to linear milliwatts."""
    if not math.isfinite(x_dbm):
        raise ValueError(f"dBm value must be finite, got {x_dbm!r}")
    return 10.0 ** (x_dbm / 10.0)


def bessel_j0(x):
    """J0(x), absolute error <= 1e-10 on |x| <= 50. Scalar or array."""
    return _j0(x)


@lru_cache(maxsize=8)
def compute_psi_constants(tolerance: float = 1e-10) -> PsiConstants:
    """Locate psi1 (first minimum of J0) and psi0 (pre-zero point of equal
    |J0|) by bracketed search on the package's own J0."""
    if not tolerance > 0:
        raise ValueError("tolerance must be > 0")
    res = minimize_scalar(
        bessel_j0, bounds=(_J0_ZERO_1, _J0_ZERO_2), method="bounded",
        options={"xatol": tolerance * 1e-2})
    if not res.success:
        raise RuntimeError("bounded minimisation of J0 failed to converge")
    psi1 = float(res.x)
    target = abs(bessel_j0(psi1))
    # J0 decreases from 1 to 0 on (0, first zero), so the bracket is valid.
    psi0 = brentq(lambda x: bessel_j0(x) - target, 1e-9, _J0_ZERO_1,
                  xtol=tolerance)
    return PsiConstants(psi0=float(psi0), psi1=psi1)


def estimation_error_variance(cfg: SystemConfig) -> float:
    """Residual estimation-error variance of pilot-based MMSE estimation when
    pilots are sent at the power ceiling: n0 / (p_max l_t + n0)."""
    return cfg.n0 / (cfg.p_max * cfg.l_t + cfg.n0)


def mean_feedback_delay(cfg: SystemConfig, l_d: int) -> float:
    """Mean lag (seconds) between estimation and data transmission over a
    block: (1/2 + l_f + l_d) delta."""
    if l_d < 0:
        raise ValueError("l_d must be >= 0")
    return (0.5 + cfg.l_f + l_d) * cfg.delta


def correlation_coefficient(f: float, d: float) -> float:
    """Time-correlation of the fading process after delay d at maximum
    Doppler f: J0(2 pi f d)."""
    if f < 0 or d < 0:
        raise ValueError("f and d must be >= 0")
    return bessel_j0(2.0 * math.pi * f * d)


def derive_constants(cfg: SystemConfig, q_c: float, l_d: int) -> DerivedConstants:
    """Assemble every derived constant for the operating point (q_c, l_d).

    phi2 <= 0 or phi3 <= 0 is permitted (flagged via sinr_feasible); it means
    outage is certain on that hop.
    """
    if not q_c > 0:
        raise ValueError("q_c must be > 0")
    if l_d < 0:
        raise ValueError("l_d must be >= 0")
    beta = estimation_error_variance(cfg)
    delay = mean_feedback_delay(cfg, l_d)
    rho_ar = correlation_coefficient(cfg.f_ar, delay)
    rho_rb = correlation_coefficient(cfg.f_rb, delay)
    l_block = 2 * cfg.l_t + cfg.l_f + 2 * l_d
    snr_min = 4.0 ** cfg.r_ab - 1.0
    phi1 = q_c / cfg.p_max
    phi2 = q_c * rho_ar ** 2 / snr_min - cfg.n0
    phi3 = q_c * rho_rb ** 2 / snr_min - cfg.n0
    phi4 = cfg.p_max * (l_block - 2 * l_d) / l_block
    lambda3 = 1.0 / (1.0 - beta)
    phi5 = (l_block - 2 * l_d) / l_d - 2.0 * lambda3 * q_c / cfg.p_max \
        if l_d > 0 else math.inf
    lambda1 = 1.0 / (q_c * (1.0 - rho_ar ** 2) * (1.0 - beta)) \
        if rho_ar ** 2 < 1.0 else math.inf
    lambda4 = 1.0 / (q_c * (1.0 - rho_rb ** 2) * (1.0 - beta)) \
        if rho_rb ** 2 < 1.0 else math.inf
    lambda2 = 1.0 / (q_c * beta)
    theta = math.exp(-2.0 * phi1 * lambda3)
    return DerivedConstants(
        q_c=q_c, l_d=l_d, l_block=l_block, beta_star=beta,
        rho_ar=rho_ar, rho_rb=rho_rb,
        phi1=phi1, phi2=phi2, phi3=phi3, phi4=phi4, phi5=phi5,
        lambda1=lambda1, lambda2=lambda2, lambda3=lambda3, lambda4=lambda4,
        theta=theta, p_max=cfg.p_max, n0=cfg.n0, r_ab=cfg.r_ab)


def max_data_symbols(cfg: SystemConfig, ld_cap: int = STATIC_CHANNEL_LD_CAP) -> int:
    """Largest data-symbol count keeping the squared correlation of both hops
    in its monotone range: floor(psi0 / (2 pi max(f) delta) - l_f - 1/2),
    clamped below at 0.

    With both Doppler frequencies zero the bound diverges; a configured cap
    is returned with a warning instead.
    """
    f = max(cfg.f_ar, cfg.f_rb)
    if f == 0.0:
        warnings.warn(
            "both hops are static (zero Doppler): the data-symbol bound is "
            f"unbounded, returning the cap {ld_cap}", stacklevel=2)
        return ld_cap
    psi0 = compute_psi_constants().psi0
    raw = psi0 / (2.0 * math.pi * f * cfg.delta) - cfg.l_f - 0.5
    return max(0, math.floor(raw))
