"""Monte Carlo block simulator.

Each block independently draws the channel estimates, the innovation and
estimation-error terms of both hops, and the three warden-side channels. The
transmission-enabled hypothesis holds when both estimate powers clear the
inversion target at the power ceiling; under it the per-hop transmit power is
q_c over the estimate power and a hop succeeds when its instantaneous SINR
clears 4^r_ab - 1. The warden's radiometer is evaluated in the long-window
limit by default: training/feedback bursts enter at their means (phi4), the
noise at n0, and the data-period term as a single draw per block. The
finite-window mode keeps the burst channels and the window-averaged noise
random instead, to study convergence toward that limit; it is not part of the
validation protocol.

Reproducibility: every run derives its generator from (seed, substream
index), so sweep points are independent and insensitive to execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import block_tallies
from .model import SystemConfig, derive_constants

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class TrialConfig:
    """Monte Carlo protocol: block count, master seed, detector mode."""

    n_blocks: int
    seed: int
    mode: str = "asymptotic"
    l_w: int | None = None

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if self.mode not in ("asymptotic", "finite"):
            raise ValueError("mode must be 'asymptotic' or 'finite'")
        if self.mode == "finite" and (self.l_w is None or self.l_w < 1):
            raise ValueError("finite mode requires l_w >= 1")


@dataclass(frozen=True)
class BlockDraw:
    """One batch of per-block complex channel draws.

    Estimates and innovations have variance 1 - beta_star, estimation errors
    beta_star, warden channels unit variance; all zero-mean circularly
    symmetric complex Gaussian.
    """

    h_hat_ar: np.ndarray
    h_hat_rb: np.ndarray
    omega_ar: np.ndarray
    omega_rb: np.ndarray
    e_ar: np.ndarray
    e_rb: np.ndarray
    h_aw: np.ndarray
    h_rw: np.ndarray
    h_bw: np.ndarray


@dataclass(frozen=True)
class SimulationReport:
    """Tallies and empirical estimates for one run.

    p_su_hat is (n_ar/n_h1) * (n_rb/n_h1); when no block enabled transmission
    it is NaN and p_su_defined is False. xi_hat is (n_fa + n_md)/n_blocks.
    Confidence half-widths are 95% normal approximations (delta method for
    the product estimator).
    """

    n_blocks: int
    n_h1: int
    n_ar: int
    n_rb: int
    p_su_hat: float
    p_su_defined: bool
    n_fa: int
    n_md: int
    xi_hat: float
    ci_halfwidth_psu: float
    ci_halfwidth_xi: float
    seed: int


@dataclass(frozen=True)
class SweepPoint:
    """One sweep grid point; error carries a diagnostic when the point's run
    could not be evaluated."""

    q_c: float
    report: SimulationReport | None
    error: str | None = None


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for substream `index` of master `seed` (order-independent)."""
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _complex_normal(rng: np.random.Generator, var: float, n: int) -> np.ndarray:
    scale = math.sqrt(var / 2.0)
    return rng.normal(0.0, scale, n) + 1j * rng.normal(0.0, scale, n)


def draw_blocks(rng: np.random.Generator, n: int, beta_star: float) -> BlockDraw:
    """Draw one batch of blocks with the stated variances."""
    v = 1.0 - beta_star
    return BlockDraw(
        h_hat_ar=_complex_normal(rng, v, n),
        h_hat_rb=_complex_normal(rng, v, n),
        omega_ar=_complex_normal(rng, v, n),
        omega_rb=_complex_normal(rng, v, n),
        e_ar=_complex_normal(rng, beta_star, n),
        e_rb=_complex_normal(rng, beta_star, n),
        h_aw=_complex_normal(rng, 1.0, n),
        h_rw=_complex_normal(rng, 1.0, n),
        h_bw=_complex_normal(rng, 1.0, n),
    )


def reconstruct_true_channel(draw: BlockDraw, rho: float, hop: str) -> np.ndarray:
    """Aged true channel: rho * estimate + sqrt(1-rho^2) * innovation + error."""
    if hop == "ar":
        est, omg, err = draw.h_hat_ar, draw.omega_ar, draw.e_ar
    elif hop == "rb":
        est, omg, err = draw.h_hat_rb, draw.omega_rb, draw.e_rb
    else:
        raise ValueError("hop must be 'ar' or 'rb'")
    return rho * est + math.sqrt(1.0 - rho ** 2) * omg + err


def run_trials(cfg: SystemConfig, q_c: float, l_d: int, tau: float,
               trial: TrialConfig, substream_index: int = 0) -> SimulationReport:
    """Simulate trial.n_blocks independent blocks at one operating point and
    threshold; returns the empirical report."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    dc = derive_constants(cfg, q_c, l_d)
    if dc.l_d < 1:
        raise ValueError("simulation requires l_d >= 1")
    rng = substream(trial.seed, substream_index)
    draw = draw_blocks(rng, trial.n_blocks, dc.beta_star)

    est2_ar = np.abs(draw.h_hat_ar) ** 2
    est2_rb = np.abs(draw.h_hat_rb) ** 2
    omg2_ar = np.abs(draw.omega_ar) ** 2
    omg2_rb = np.abs(draw.omega_rb) ** 2
    err2_ar = np.abs(draw.e_ar) ** 2
    err2_rb = np.abs(draw.e_rb) ** 2
    aw2 = np.abs(draw.h_aw) ** 2
    rw2 = np.abs(draw.h_rw) ** 2
    bw2 = np.abs(draw.h_bw) ** 2
    snr_min = 4.0 ** cfg.r_ab - 1.0
    ld_over_l = dc.l_d / dc.l_block

    if trial.mode == "asymptotic":
        n_h1, n_ar, n_rb, n_fa, n_md = block_tallies(
            est2_ar, est2_rb, omg2_ar, omg2_rb, err2_ar, err2_rb,
            aw2, rw2, bw2, cfg.p_max, cfg.n0, dc.q_c,
            dc.rho_ar ** 2, dc.rho_rb ** 2, snr_min, ld_over_l, dc.phi4, tau)
    else:
        h1 = (est2_ar * cfg.p_max >= dc.q_c) & (est2_rb * cfg.p_max >= dc.q_c)
        sinr_ar = dc.q_c * dc.rho_ar ** 2 / (
            dc.q_c * ((1.0 - dc.rho_ar ** 2) * omg2_ar + err2_ar) / est2_ar
            + cfg.n0)
        sinr_rb = dc.q_c * dc.rho_rb ** 2 / (
            dc.q_c * ((1.0 - dc.rho_rb ** 2) * omg2_rb + err2_rb) / est2_rb
            + cfg.n0)
        # bursts stay random and the noise is window-averaged; the data-period
        # term matches the asymptotic mode
        l = dc.l_block
        burst = cfg.p_max * (cfg.l_t * (aw2 + bw2) + cfg.l_f * rw2) / l
        noise = rng.gamma(shape=trial.l_w, scale=cfg.n0 / trial.l_w,
                          size=trial.n_blocks)
        stat = np.where(
            h1,
            burst + noise + ld_over_l * dc.q_c * (aw2 / est2_ar + rw2 / est2_rb),
            burst + noise + ld_over_l * cfg.p_max * bw2)
        n_h1 = int(np.count_nonzero(h1))
        n_ar = int(np.count_nonzero(h1 & (sinr_ar > snr_min)))
        n_rb = int(np.count_nonzero(h1 & (sinr_rb > snr_min)))
        n_md = int(np.count_nonzero(h1 & (stat <= tau)))
        n_fa = int(np.count_nonzero(~h1 & (stat > tau)))

    n = trial.n_blocks
    xi_hat = (n_fa + n_md) / n
    ci_xi = _Z95 * math.sqrt(max(xi_hat * (1.0 - xi_hat), 0.0) / n)
    if n_h1 > 0:
        p_r = n_ar / n_h1
        p_b = n_rb / n_h1
        p_su_hat = p_r * p_b
        var = (p_b ** 2 * p_r * (1.0 - p_r) + p_r ** 2 * p_b * (1.0 - p_b)) / n_h1
        ci_psu = _Z95 * math.sqrt(max(var, 0.0))
        defined = True
    else:
        p_su_hat = math.nan
        ci_psu = math.nan
        defined = False
    return SimulationReport(
        n_blocks=n, n_h1=n_h1, n_ar=n_ar, n_rb=n_rb,
        p_su_hat=p_su_hat, p_su_defined=defined,
        n_fa=n_fa, n_md=n_md, xi_hat=xi_hat,
        ci_halfwidth_psu=ci_psu, ci_halfwidth_xi=ci_xi, seed=trial.seed)


def empirical_success_sweep(cfg: SystemConfig, l_d: int, q_c_grid,
                            trial: TrialConfig) -> list[SweepPoint]:
    """One run per grid value with independent substreams (seed, index).
    Per-point failures are recorded and do not abort the sweep."""
    q_c_grid = list(q_c_grid)
    if not q_c_grid:
        raise ValueError("q_c_grid must be non-empty")
    points = []
    for i, q_c in enumerate(q_c_grid):
        try:
            # tau is irrelevant to the success tallies; any value works
            report = run_trials(cfg, q_c, l_d, 0.0, trial, substream_index=i)
            points.append(SweepPoint(q_c=q_c, report=report))
        except (ValueError,) as exc:
            points.append(SweepPoint(q_c=q_c, report=None, error=str(exc)))
    return points
