"""Independent quadrature oracles for the closed forms in ``analytics``.

Each oracle integrates the defining probability integral numerically, using
only elementary distribution facts (exponential densities, the CDF of a sum
of two exponentials) so it shares no algebra with the closed-form path it
certifies. Semi-infinite ranges are truncated at ``truncation_radius``
exponential scale lengths past the lower limit; the discarded tail of a unit
exponential beyond 40 scale lengths is below 5e-18, well under any tolerance
used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import QuadratureError
from .model import DerivedConstants

# oracle-side threshold for treating the two interference rates as one;
# deliberately far tighter than the closed-form branch switch so the oracle
# exercises the generic route wherever it is numerically trustworthy
_ORACLE_EQUAL_RTOL = 1e-9


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_subdivisions: int = 200
    truncation_radius: float = 40.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_subdivisions < 10:
            raise ValueError("max_subdivisions must be >= 10")
        if self.truncation_radius < 10:
            raise ValueError("truncation_radius must cover the tail bound")


def _checked_quad(fn, lo, hi, spec: QuadratureSpec, what: str,
                  tight: bool = False) -> float:
    eps_scale = 0.01 if tight else 1.0
    val, err = quad(fn, lo, hi,
                    epsabs=spec.abs_tol * eps_scale,
                    epsrel=spec.rel_tol * eps_scale,
                    limit=spec.max_subdivisions)
    budget = max(spec.abs_tol, spec.rel_tol * abs(val)) * 100.0
    if err > budget:
        raise QuadratureError(
            f"{what}: reported error {err} exceeds tolerance budget {budget}")
    return val


def _exp_sum_cdf(s: float, lam_a: float, lam_b: float) -> float:
    """CDF at s of the sum of two independent exponential variables with
    rates lam_a and lam_b (lam_a may be infinite, collapsing to one term)."""
    if s <= 0.0:
        return 0.0
    if math.isinf(lam_a):
        return 1.0 - math.exp(-lam_b * s)
    if abs(lam_a - lam_b) <= _ORACLE_EQUAL_RTOL * max(lam_a, lam_b):
        return 1.0 - math.exp(-lam_b * s) * (1.0 + lam_b * s)
    return 1.0 - (lam_b * math.exp(-lam_a * s)
                  - lam_a * math.exp(-lam_b * s)) / (lam_b - lam_a)


def h1_probability_quadrature(dc: DerivedConstants,
                              spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Numerically integrate the two independent estimate-power tails whose
    product is the transmission prior theta."""
    lam3 = dc.lambda3
    hi = dc.phi1 + spec.truncation_radius / lam3

    def tail(x):
        return lam3 * math.exp(-lam3 * x)

    one_hop = _checked_quad(tail, dc.phi1, hi, spec, "H1 tail")
    return one_hop * one_hop


def _hop_success_quadrature(phi1: float, phi2: float, lam_a: float,
                            lam2: float, lam3: float,
                            spec: QuadratureSpec) -> float:
    """One hop's conditional success probability via a single numeric
    integral over the estimate power, the two interference dimensions having
    been reduced to the elementary two-exponential-sum CDF."""
    if phi2 <= 0.0:
        return 0.0
    hi = phi1 + spec.truncation_radius / lam3

    def integrand(x3):
        return lam3 * math.exp(-lam3 * x3) * _exp_sum_cdf(phi2 * x3, lam_a, lam2)

    joint = _checked_quad(integrand, phi1, hi, spec, "hop success integral")
    other_tail = math.exp(-lam3 * phi1)
    return joint * other_tail / math.exp(-2.0 * lam3 * phi1)


def success_probability_quadrature(dc: DerivedConstants,
                                   spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Oracle for the end-to-end success probability."""
    p_r = _hop_success_quadrature(dc.phi1, dc.phi2, dc.lambda1, dc.lambda2,
                                  dc.lambda3, spec)
    p_b = _hop_success_quadrature(dc.phi1, dc.phi3, dc.lambda4, dc.lambda2,
                                  dc.lambda3, spec)
    return p_r * p_b


def miss_detection_quadrature(dc: DerivedConstants, tau: float,
                              spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Oracle for the miss-detection probability at threshold tau.

    Integrates the joint event {y1/y2 + y3/y4 < nu2, both estimate powers
    above phi1} with the two innermost layers reduced in elementary closed
    form, then divides by theta. The outer two dimensions stay numeric.
    """
    tau_min = dc.phi4 + dc.n0
    if tau < tau_min:
        raise ValueError(f"oracle requires tau >= tau_min={tau_min}")
    lam3 = dc.lambda3
    phi1 = dc.phi1
    nu2 = dc.l_block * (tau - tau_min) / (dc.l_d * dc.q_c)
    if nu2 == 0.0:
        return 0.0
    y4_hi = phi1 + spec.truncation_radius / lam3

    def y2_layer(c):
        # int_{phi1}^inf lam3 e^{-lam3 y2} (1 - e^{-c y2}) dy2, c >= 0
        return math.exp(-lam3 * phi1) \
            - lam3 / (lam3 + c) * math.exp(-(lam3 + c) * phi1)

    def y3_layer(y4):
        def integrand(y3):
            return math.exp(-y3) * y2_layer(nu2 - y3 / y4)

        return _checked_quad(integrand, 0.0, nu2 * y4, spec,
                             "miss detection inner integral", tight=True)

    def y4_layer(y4):
        return lam3 * math.exp(-lam3 * y4) * y3_layer(y4)

    joint = _checked_quad(y4_layer, phi1, y4_hi, spec,
                          "miss detection outer integral")
    return joint / dc.theta
