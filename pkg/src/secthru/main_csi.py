"""Power control and secure throughput when only the main-channel gain is known.

Power depends on z_m alone, so the stationarity condition averages the state
marginal gain over the eavesdropper law on z_e < z_m/gamma:

    beta * Int_0^{z_m/gamma} r(mu)^(-beta-1) (z_m - gamma*z_e)
           / (1 + gamma*mu*z_e)^2 p_E(z_e) dz_e  =  lam,

with r(mu) = (1 + mu*z_m)/(1 + gamma*mu*z_e). The left side decreases strictly
in mu and increases strictly in z_m at mu = 0, so the policy transmits exactly
above a cutoff gain alpha and each active z_m has a unique root.
"""

import math

import numpy as np

from . import ergodic
from ._region import bisect_power_lanes, idle_marginal_gain, main_region_expectation
from .model import (
    LN2,
    FadingLaw,
    LinkBudget,
    PowerPolicy,
    QosSpec,
    ThroughputResult,
    ValidationError,
)
from .numerics import (
    DEFAULT_TOL,
    NumericsError,
    Tolerances,
    bisect_root,
    calibration_tol,
    expand_bracket,
    integrate,
    integrate_density,
    panel_nodes,
)

_TABLE_POINTS = 2049


def _marginal_weight(mu, zm, ze, gamma, beta):
    log_ratio = np.log1p(mu * zm) - np.log1p(gamma * mu * ze)
    return (
        beta
        * np.exp(-(beta + 1.0) * log_ratio)
        * (zm - gamma * ze)
        / (1.0 + gamma * mu * ze) ** 2
    )


def kkt_lhs_main(z_m: float, mu: float, beta: float, link: LinkBudget, law_e: FadingLaw,
                 tol: Tolerances = DEFAULT_TOL) -> float:
    """Marginal gain of power at main-channel gain z_m, averaged over z_e."""
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if mu < 0:
        raise ValidationError("mu must be nonnegative")
    gamma = link.gamma
    if not z_m > 0.0:
        return 0.0
    hi = min(z_m / gamma, law_e.tail_cutoff(tol.quad_trunc_mass))
    res = integrate_density(
        lambda ze: _marginal_weight(mu, z_m, ze, gamma, beta),
        law_e, tol, hi=hi, floor=1e-6,
    )
    return res.value


def power_main(z_m: float, beta: float, lam: float, link: LinkBudget, law_e: FadingLaw,
               tol: Tolerances = DEFAULT_TOL) -> float:
    """Optimal power at gain z_m: 0 when the zero-power gain is <= lam, else the unique root."""
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if not lam > 0:
        raise ValidationError("lam must be positive")
    if kkt_lhs_main(z_m, 0.0, beta, link, law_e, tol) <= lam:
        return 0.0
    f = lambda mu: kkt_lhs_main(z_m, mu, beta, link, law_e, tol) - lam
    lo, hi = expand_bracket(f, 0.0, 1.0)
    return bisect_root(f, lo, hi, tol)


def alpha_threshold(beta: float, lam: float, link: LinkBudget, law_e: FadingLaw,
                    tol: Tolerances = DEFAULT_TOL,
                    law_m: FadingLaw | None = None) -> float:
    """Cutoff gain below which the main-CSI policy is silent.

    For gamma = 1 this solves Int_0^alpha P(z_E <= t) dt = lam/beta (the
    integration-by-parts form, which only holds there); for general gamma it
    is the root of the zero-power marginal gain against lam. Returns math.inf
    when lam is beyond any gain achievable on the truncated support.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if lam < 0:
        raise ValidationError("lam must be nonnegative")
    if lam == 0.0:
        return 0.0
    gamma = link.gamma
    search_law = law_m if law_m is not None else law_e
    z_hi = search_law.tail_cutoff(tol.quad_trunc_mass)

    if gamma == 1.0:
        target = lam / beta
        cdf_area = lambda a: integrate(law_e.cdf, 0.0, a, tol, floor=1e-6).value - target
        if cdf_area(z_hi) <= 0.0:
            return math.inf
        return bisect_root(cdf_area, 0.0, z_hi, tol)

    gain0 = lambda z: beta * idle_marginal_gain(z, gamma, law_e, tol) - lam
    # the zero-power gain must be increasing in z_m for the root to be a cutoff
    probes = gain0(z_hi * 0.25), gain0(z_hi * 0.5), gain0(z_hi)
    if not (probes[0] < probes[1] < probes[2]):
        raise NumericsError("zero-power marginal gain is not increasing in z_m")
    if probes[2] <= 0.0:
        return math.inf
    return bisect_root(gain0, 0.0, z_hi, tol)


def _mu_cap(link: LinkBudget) -> float:
    # see full_csi._mu_cap: a runaway guard, not a physical bound
    return 1e12 * max(1.0, link.avg_snr)


def mean_power_main(lam: float, beta: float, link: LinkBudget,
                    law_m: FadingLaw, law_e: FadingLaw,
                    tol: Tolerances = DEFAULT_TOL) -> float:
    """Expected transmit SNR of the main-CSI policy with multiplier lam."""
    if math.isinf(lam):
        return 0.0
    gamma = link.gamma
    alpha = alpha_threshold(beta, lam, link, law_e, tol, law_m=law_m)
    res = main_region_expectation(
        marginal_gain=lambda mu, zm, ze: _marginal_weight(mu, zm, ze, gamma, beta),
        integrand=None,
        lam=lam,
        gamma=gamma,
        law_m=law_m,
        law_e=law_e,
        tol=tol,
        alpha=alpha,
        floor=max(link.avg_snr, 1e-6),
        include_idle_mass=False,
        mu_cap=_mu_cap(link),
    )
    return res.value


def calibrate_lambda_main(link: LinkBudget, beta: float, law_m: FadingLaw, law_e: FadingLaw,
                          tol: Tolerances = DEFAULT_TOL) -> float:
    """Multiplier spending the average-SNR budget with equality (math.inf at zero budget)."""
    lam, _ = _calibrate_main(link, beta, law_m, law_e, tol)
    return lam


def _calibrate_main(link, beta, law_m, law_e, tol):
    if not beta > 0:
        raise ValidationError("beta must be positive")
    if link.avg_snr == 0.0:
        return math.inf, 0.0
    target = tol.power_rel_tol * link.avg_snr
    tol_cal = calibration_tol(tol)

    def residual_log(u):
        return mean_power_main(math.exp(u), beta, link, law_m, law_e, tol_cal) - link.avg_snr

    hi = math.log(beta * law_m.tail_cutoff(tol.quad_trunc_mass))
    lo = hi - 4.0
    for _ in range(60):
        if residual_log(lo) > 0.0:
            break
        lo -= 4.0
    else:
        raise NumericsError("could not bracket the power calibration")
    lam = math.exp(bisect_root(residual_log, lo, hi, tol, f_tol=target))
    residual = abs(mean_power_main(lam, beta, link, law_m, law_e, tol_cal) - link.avg_snr)
    if residual > target:
        raise NumericsError(f"calibration residual {residual:.3e} above target {target:.3e}")
    return lam, residual


def throughput_main(qos: QosSpec, link: LinkBudget, law_m: FadingLaw, law_e: FadingLaw,
                    tol: Tolerances = DEFAULT_TOL) -> ThroughputResult:
    """Effective secure throughput under the calibrated main-CSI policy."""
    if qos.theta == 0.0:
        return ergodic.solve_main(qos, link, law_m, law_e, tol)[1]
    if link.avg_snr == 0.0:
        return ThroughputResult(0.0, 0.0, math.inf, 0.0, 0.0, qos.theta)

    beta = qos.beta
    gamma = link.gamma
    lam, residual = _calibrate_main(link, beta, law_m, law_e, tol)
    alpha = alpha_threshold(beta, lam, link, law_e, tol, law_m=law_m)
    res = main_region_expectation(
        marginal_gain=lambda mu, zm, ze: _marginal_weight(mu, zm, ze, gamma, beta),
        integrand=lambda mu, zm, ze: np.exp(
            -beta * (np.log1p(mu * zm) - np.log1p(gamma * mu * ze))
        ),
        lam=lam,
        gamma=gamma,
        law_m=law_m,
        law_e=law_e,
        tol=tol,
        alpha=alpha,
        floor=1.0,
        include_idle_mass=True,
        mu_cap=_mu_cap(link),
    )
    value = max(0.0, -math.log(res.value) / (beta * LN2))
    quad_error = res.error / (max(res.value, 1e-12) * beta * LN2)
    return ThroughputResult(
        throughput_bits_s_hz=value,
        throughput_bits_s=value * qos.bandwidth_b,
        lam=lam,
        power_residual=residual,
        quad_error=quad_error,
        theta=qos.theta,
    )


def tabulate_main_policy(solve_mu_nodes, alpha, law_m, tol):
    """Dense-table evaluator for a per-gain power map that needs a solve per call.

    Queue simulation evaluates the policy on millions of gains; re-solving the
    inner integral per draw is wasteful, so the map is sampled on a fine grid
    over [alpha, cutoff] and interpolated. Below alpha the policy is exactly 0.
    """
    zm_hi = law_m.tail_cutoff(tol.quad_trunc_mass)
    if not (alpha < zm_hi):
        def silent(z_m):
            return np.zeros(np.asarray(z_m, dtype=float).shape)
        return silent, None

    # quadratic spacing: dense through the turn-on just above alpha
    u = np.linspace(0.0, 1.0, _TABLE_POINTS)
    grid = alpha + (zm_hi - alpha) * u * u
    mu_grid = solve_mu_nodes(grid)
    table = np.column_stack([grid, mu_grid])

    def state_power(z_m):
        z_m = np.asarray(z_m, dtype=float)
        mu = np.interp(z_m, grid, mu_grid)
        return np.where(z_m <= alpha, 0.0, mu)

    return state_power, table


def build_policy_main(qos: QosSpec, link: LinkBudget, law_m: FadingLaw, law_e: FadingLaw,
                      tol: Tolerances = DEFAULT_TOL) -> PowerPolicy:
    """Calibrate and package the main-CSI policy (tabulated evaluator)."""
    if qos.theta == 0.0:
        return ergodic.solve_main(qos, link, law_m, law_e, tol)[0]
    if link.avg_snr == 0.0:
        return PowerPolicy(
            csi_mode="main", lam=math.inf, beta=qos.beta, threshold=math.inf,
            state_power=lambda z_m: np.zeros(np.asarray(z_m, float).shape),
        )
    beta = qos.beta
    gamma = link.gamma
    lam = calibrate_lambda_main(link, beta, law_m, law_e, tol)
    alpha = alpha_threshold(beta, lam, link, law_e, tol, law_m=law_m)
    cap = _mu_cap(link)

    def solve_nodes(zm_nodes):
        return _solve_mu_lanes(zm_nodes, lam, beta, gamma, law_e, tol, cap)

    state_power, table = tabulate_main_policy(solve_nodes, alpha, law_m, tol)
    return PowerPolicy(csi_mode="main", lam=lam, beta=beta, threshold=alpha,
                       state_power=state_power, table=table)


def _solve_mu_lanes(zm_nodes, lam, beta, gamma, law_e, tol, mu_cap, inner_panels=64):
    """Vectorized per-gain root solve on a fixed inner eavesdropper grid."""
    u, wu = panel_nodes(0.0, 1.0, inner_panels)
    span = zm_nodes / gamma
    ze = (u * u)[None, :] * span[:, None]
    wpe = law_e.density(ze) * span[:, None] * 2.0 * u[None, :]
    zm_col = zm_nodes[:, None]

    def gain_at(mu):
        return (_marginal_weight(mu[:, None], zm_col, ze, gamma, beta) * wpe) @ wu

    return bisect_power_lanes(gain_at, lam, zm_nodes.size, tol, mu_cap)
