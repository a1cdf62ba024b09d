"""Monte Carlo buffer validation of the QoS-exponent semantics.

A constant-rate arrival stream feeds a buffer drained by the per-frame secure
service of a calibrated policy. When the arrival rate equals the effective
secure throughput solved for exponent theta, the stationary queue tail must
satisfy ln P(Q >= q) ~ -theta * q; the fitted slope of the simulated tail is
the check.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import FadingLaw, LinkBudget, PowerPolicy, QosSpec, ValidationError

_N_THRESHOLDS = 20
_MIN_FRAMES = 100_000
_CHUNK = 2_000_000


class InstabilityWarning(UserWarning):
    """Arrival rate at or above the mean service rate: tail estimates are meaningless."""


@dataclass(frozen=True)
class TailHistogram:
    """Empirical exceedance curve of the stationary queue length (bits)."""

    thresholds: np.ndarray
    exceedance_prob: np.ndarray
    frames: int
    seed: int
    arrival_per_frame: float

    def __post_init__(self):
        thr = np.asarray(self.thresholds, dtype=float)
        prob = np.asarray(self.exceedance_prob, dtype=float)
        if thr.size != prob.size:
            raise ValidationError("thresholds and exceedance_prob must align")
        if thr.size and not np.all(np.diff(thr) > 0):
            raise ValidationError("thresholds must be strictly ascending")
        if prob.size and (np.any(prob < 0) or np.any(prob > 1) or np.any(np.diff(prob) > 1e-12)):
            raise ValidationError("exceedance probabilities must lie in [0,1], non-increasing")


def lindley_queue(increments: np.ndarray, q0: float = 0.0) -> np.ndarray:
    """Queue lengths after each arrival-minus-service increment, from Q[0] = q0.

    Uses the reflection identity Q[n] = max(q0 + S[n], S[n] - min_{j<=n} S[j])
    so the recursion vectorizes; exact for the per-frame Lindley dynamics.
    """
    s = np.cumsum(np.asarray(increments, dtype=float))
    return np.maximum(q0 + s, s - np.minimum.accumulate(s))


def simulate_queue(
    policy: PowerPolicy,
    qos: QosSpec,
    link: LinkBudget,
    law_m: FadingLaw,
    law_e: FadingLaw,
    arrival_bits_per_frame: float,
    frames: int,
    seed: int,
) -> TailHistogram:
    """One seeded buffer run; thresholds at evenly spaced quantiles after burn-in.

    Service per frame is T*B times the positive part of the realized secrecy
    rate at i.i.d. gain draws, with power from the policy. The first 10% of
    frames are discarded as burn-in. Emits InstabilityWarning when the arrival
    rate reaches the empirical mean service rate.
    """
    if frames < _MIN_FRAMES:
        raise ValidationError(f"frames must be >= {_MIN_FRAMES}")
    if arrival_bits_per_frame < 0:
        raise ValidationError("arrival must be nonnegative")

    rng = np.random.default_rng(int(seed))
    bits_per_rate = qos.frame_t * qos.bandwidth_b
    gamma = link.gamma

    queue = np.empty(frames)
    q0 = 0.0
    service_sum = 0.0
    pos = 0
    while pos < frames:
        m = min(_CHUNK, frames - pos)
        z_m = law_m.sample(rng, m)
        z_e = law_e.sample(rng, m)
        if policy.csi_mode == "full":
            mu = policy.state_power(z_m, z_e)
        else:
            mu = policy.state_power(z_m)
        rate = np.log2(1.0 + mu * z_m) - np.log2(1.0 + gamma * mu * z_e)
        np.maximum(rate, 0.0, out=rate)
        service = bits_per_rate * rate
        service_sum += float(service.sum())
        chunk_q = lindley_queue(arrival_bits_per_frame - service, q0)
        queue[pos:pos + m] = chunk_q
        q0 = float(chunk_q[-1])
        pos += m

    if arrival_bits_per_frame >= service_sum / frames:
        warnings.warn(
            "arrival rate is at or above the mean service rate; the queue is "
            "unstable and tail estimates are meaningless",
            InstabilityWarning,
        )

    body = queue[frames // 10:]
    thresholds = _quantile_thresholds(body, frames)
    if thresholds.size == 0:
        thresholds = np.linspace(1.0, 20.0, _N_THRESHOLDS)
        probs = np.zeros(_N_THRESHOLDS)
    else:
        body_sorted = np.sort(body)
        idx = np.searchsorted(body_sorted, thresholds, side="left")
        probs = (body_sorted.size - idx) / body_sorted.size
    return TailHistogram(
        thresholds=thresholds,
        exceedance_prob=probs,
        frames=frames,
        seed=int(seed),
        arrival_per_frame=float(arrival_bits_per_frame),
    )


def _quantile_thresholds(body: np.ndarray, frames: int) -> np.ndarray:
    # evenly spaced quantile levels from the upper bulk into the resolvable tail
    deepest = max(100.0 / frames, 2e-5)
    levels = np.linspace(0.80, 1.0 - deepest, _N_THRESHOLDS)
    qs = np.quantile(body, levels)
    qs = np.unique(qs)
    return qs[qs > 0.0]


def estimate_decay(hist: TailHistogram, fit_range: tuple[float, float] | None = None):
    """Least-squares decay slope of ln P(Q >= q) over the fit range.

    Returns (theta_hat, std_error). Thresholds with fewer than 100 expected
    exceedance counts are dropped to avoid deep-tail noise; at least 5 usable
    points are required.
    """
    q = np.asarray(hist.thresholds, dtype=float)
    p = np.asarray(hist.exceedance_prob, dtype=float)
    keep = p * hist.frames > 100.0
    keep &= p < 1.0
    if fit_range is not None:
        keep &= (q >= fit_range[0]) & (q <= fit_range[1])
    q = q[keep]
    p = p[keep]
    if q.size < 5:
        raise ValidationError("insufficient tail mass in the fit range (need >= 5 thresholds)")

    y = np.log(p)
    qc = q - q.mean()
    sxx = float(qc @ qc)
    slope = float(qc @ (y - y.mean())) / sxx
    resid = (y - y.mean()) - slope * qc
    dof = max(1, q.size - 2)
    std_error = math.sqrt(float(resid @ resid) / dof / sxx)
    return -slope, std_error
