"""Internal quadrature/bisection machinery shared by the policy solvers.

The throughput and average-power integrals all live on the transmit region
z_m > gamma*z_e + offset (full CSI and the unconstrained benchmark) or on
z_m > alpha with an inner eavesdropper integral (main CSI). The helpers here
tensorize those regions so the per-state power solves vectorize, and both
quadrature dimensions refine together through numerics.refine_panels.
"""

import math
from typing import Callable, Optional

import numpy as np

from .model import FadingLaw
from .numerics import (
    NumericsError,
    QuadResult,
    Tolerances,
    integrate_density,
    panel_nodes,
    refine_panels,
)


def bisect_power_lanes(
    gain_at: Callable[[np.ndarray], np.ndarray],
    lam: float,
    n_lanes: int,
    tol: Tolerances,
    mu_cap: float,
) -> np.ndarray:
    """Per-lane bisection of a strictly decreasing marginal gain against lam.

    gain_at(mu) evaluates the gain of every lane at its own mu. Lanes with
    gain_at(0) <= lam get exactly 0. The upper bracket doubles from 1 until the
    gain drops below lam; hitting mu_cap signals a bug (the gain is monotone).
    """
    mu0 = np.zeros(n_lanes)
    active = gain_at(mu0) > lam
    if not np.any(active):
        return mu0

    lo = np.zeros(n_lanes)
    hi = np.ones(n_lanes)
    for _ in range(200):
        need = active & (gain_at(hi) > lam)
        if not need.any():
            break
        if np.any(hi[need] >= mu_cap):
            raise NumericsError("power bracket exceeded cap; gain should be monotone")
        lo = np.where(need, hi, lo)
        hi = np.where(need, 2.0 * hi, hi)
    else:
        raise NumericsError("power bracket expansion did not terminate")

    for _ in range(tol.max_iter):
        mid = 0.5 * (lo + hi)
        above = gain_at(mid) > lam
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= tol.root_tol * np.maximum(1.0, hi)):
            break
    return np.where(active, 0.5 * (lo + hi), 0.0)


def transmit_region_expectation(
    power_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    offset: float,
    gamma: float,
    law_m: FadingLaw,
    law_e: FadingLaw,
    tol: Tolerances,
    floor: float,
    include_idle_mass: bool,
) -> QuadResult:
    """Joint expectation of integrand(mu, z_m, z_e) over z_m > gamma*z_e + offset.

    power_fn supplies mu on the active region. With include_idle_mass the
    complement contributes 1 per unit probability (the value every throughput
    integrand takes at zero rate), so the result is a full expectation of a
    function that equals 1 off the transmit region.

    Both variables are substituted to resolve the threshold boundary layers:
    the power turns on over a distance ~offset above z_m = gamma*z_e + offset
    and grows like sqrt(distance/offset) beyond it, and the same ~offset scale
    appears in z_e near 0. Uniform panels in w and v with
    gamma*z_e = offset*(w^2 - 1) and z_m = gamma*z_e + offset*v^2 stay
    resolved at any calibrated multiplier.
    """
    zm_hi = law_m.tail_cutoff(tol.quad_trunc_mass)
    ze_hi = law_e.tail_cutoff(tol.quad_trunc_mass)
    ze_cap = min(ze_hi, (zm_hi - offset) / gamma)
    if not ze_cap > 0.0:
        return QuadResult(1.0 if include_idle_mass else 0.0, 0.0, 0)

    idle_tail = 1.0 - float(law_e.cdf(ze_cap)) if include_idle_mass else 0.0
    w_max = np.sqrt(1.0 + gamma * ze_cap / offset)

    def at(n: int) -> float:
        w, we = panel_nodes(1.0, w_max, n)
        u, wu = panel_nodes(0.0, 1.0, n)
        ze = offset * (w * w - 1.0) / gamma
        we = we * (2.0 * offset / gamma) * w  # pull the z_e jacobian into the weights
        t = gamma * ze + offset
        v_max = np.sqrt((zm_hi - gamma * ze) / offset)  # z_m(v_max) = zm_hi
        v = 1.0 + (v_max[:, None] - 1.0) * u[None, :]
        zm = (gamma * ze)[:, None] + offset * v * v
        zeg = np.broadcast_to(ze[:, None], zm.shape)
        mu = power_fn(zm, zeg)
        vals = integrand(mu, zm, zeg) * law_m.density(zm)
        jac = 2.0 * offset * v * (v_max[:, None] - 1.0)
        inner = (vals * jac) @ wu
        if include_idle_mass:
            inner = inner + law_m.cdf(t)
        return float(we @ (inner * law_e.density(ze))) + idle_tail

    return refine_panels(at, tol, floor=floor, max_panels=256)


def idle_marginal_gain(z_m: float, gamma: float, law_e: FadingLaw, tol: Tolerances) -> float:
    """Integral of (z_m - gamma*t) over the eavesdropper law for t < z_m/gamma.

    This is the zero-power marginal gain of the main-CSI problems (up to the
    QoS exponent factor); it is strictly increasing in z_m, which the
    threshold solvers rely on.
    """
    if not z_m > 0.0:
        return 0.0
    hi = min(z_m / gamma, law_e.tail_cutoff(tol.quad_trunc_mass))
    res = integrate_density(lambda t: z_m - gamma * t, law_e, tol, hi=hi, floor=1e-6)
    return res.value


def main_region_expectation(
    marginal_gain: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    integrand: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]],
    lam: float,
    gamma: float,
    law_m: FadingLaw,
    law_e: FadingLaw,
    tol: Tolerances,
    alpha: float,
    floor: float,
    include_idle_mass: bool,
    mu_cap: float,
) -> QuadResult:
    """Expectation over z_m > alpha with a per-z_m power solve and inner z_e integral.

    Each z_m node solves (marginal_gain integrated over z_e < z_m/gamma) = lam
    for its power. integrand(mu, z_m, z_e) is then integrated over the same
    inner region; integrand=None integrates the power itself (no inner
    integral). include_idle_mass adds the probability mass where the service
    is zero (z_m <= alpha, z_e >= z_m/gamma, truncated z_m tail) at value 1.

    Both variables are substituted to keep the threshold layers resolved at
    any calibration: the power turns on over a distance ~alpha above the
    cutoff, so z_m = alpha*w^2 with uniform panels in w >= 1; the inner
    integrands develop a layer of width ~1/mu near z_e = 0 once the power is
    large, handled by z_e = (z_m/gamma)*u^2.
    """
    zm_hi = law_m.tail_cutoff(tol.quad_trunc_mass)
    if not (alpha < zm_hi):
        return QuadResult(1.0 if include_idle_mass else 0.0, 0.0, 0)
    base = float(law_m.cdf(alpha)) + (1.0 - float(law_m.cdf(zm_hi))) if include_idle_mass else 0.0
    anchor = max(alpha, zm_hi * 1e-14)
    w_max = math.sqrt(zm_hi / anchor)

    def at(n: int) -> float:
        w, wm = panel_nodes(1.0, w_max, n)
        zm = anchor * w * w
        wm = wm * 2.0 * anchor * w  # z_m jacobian folded into the weights
        u, wu = panel_nodes(0.0, 1.0, n)
        span = zm / gamma
        ze = (u * u)[None, :] * span[:, None]
        jac = span[:, None] * 2.0 * u[None, :]
        wpe = law_e.density(ze) * jac
        zm_col = zm[:, None]

        def gain_at(mu: np.ndarray) -> np.ndarray:
            return (marginal_gain(mu[:, None], zm_col, ze) * wpe) @ wu

        mu = bisect_power_lanes(gain_at, lam, zm.size, tol, mu_cap)
        if integrand is None:
            vals = mu
        else:
            vals = (integrand(mu[:, None], zm_col, ze) * wpe) @ wu
            if include_idle_mass:
                vals = vals + (1.0 - law_e.cdf(span))
        return float(wm @ (vals * law_m.density(zm))) + base

    return refine_panels(at, tol, floor=floor, max_panels=256)
