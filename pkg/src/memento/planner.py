"""Analytical configuration for sampling rates and report batching.

Pure functions relating window size, error targets, confidence, hierarchy
size and the per-packet control bandwidth budget. The network-wide error
model splits into a reporting-delay component, which grows with the batch
size, and a sampling component, which shrinks with it; `optimal_batch`
finds the integer batch size minimizing their sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import ConfigError

_SQRT2 = math.sqrt(2.0)

# Rational approximation coefficients (Acklam) for the initial guess;
# a Halley step against erfc pushes the error far below 1e-9.
_A = (-3.969683028665376e+01, 2.209460984245205e+02,
      -2.759285104469687e+02, 1.383577518672690e+02,
      -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02,
      -1.556989798598866e+02, 6.680131188771972e+01,
      -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01,
      -2.400758277161838e+00, -2.549732539343734e+00,
      4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01,
      2.445134137142996e+00, 3.754408661907416e+00)


def normal_cdf(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-z / _SQRT2)


def z_score(p: float) -> float:
    """Inverse standard normal CDF, absolute error well below 1e-6."""
    if not 0.0 < p < 1.0:
        raise ConfigError(f"quantile probability must be in (0, 1), got {p}")
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q
               + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 0.97575:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r
               + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r
                 + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q
                + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # one Halley refinement step
    err = normal_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def _clamp_tau(tau: float, context: str) -> float:
    if tau > 1.0:
        warnings.warn(
            f"{context}: required sampling probability {tau:.4g} exceeds 1; "
            f"clamped (the stated guarantee no longer holds)",
            stacklevel=3)
        return 1.0
    return tau


def min_tau_hh(window: int, eps_s: float, delta: float) -> float:
    """Minimum Full-update probability for the windowed frequency
    estimation guarantee with sampling error eps_s and confidence delta."""
    if window <= 0 or not 0 < eps_s < 1 or not 0 < delta < 1:
        raise ConfigError("need window > 0 and eps_s, delta in (0, 1)")
    tau = z_score(1.0 - delta / 4.0) / (window * eps_s * eps_s)
    return _clamp_tau(tau, "min_tau_hh")


def min_tau_hhh(window: int, eps_s: float, delta: float, hier_size: int
                ) -> float:
    """Minimum per-packet Full-update probability for the hierarchical
    guarantee; scales linearly with the hierarchy size."""
    if window <= 0 or not 0 < eps_s < 1 or not 0 < delta < 1:
        raise ConfigError("need window > 0 and eps_s, delta in (0, 1)")
    if hier_size < 1:
        raise ConfigError("hier_size must be positive")
    tau = (z_score(1.0 - delta / 2.0) * hier_size
           / (window * eps_s * eps_s))
    return _clamp_tau(tau, "min_tau_hhh")


def oversample_adjust(eps_a: float, eps_s: float) -> float:
    """Tightened per-sketch error target compensating for the chance of
    drawing more samples than expected: eps_a / (1 + eps_s)."""
    if not 0 < eps_a < 1 or not 0 <= eps_s < 1:
        raise ConfigError("eps_a in (0,1) and eps_s in [0,1) required")
    return eps_a / (1.0 + eps_s)


@dataclass(frozen=True)
class DeploymentParams:
    """Inputs of the network-wide error model.

    points: number of measurement points reporting to the controller.
    overhead_bytes: per-message header cost in bytes.
    sample_bytes: bytes to report one sampled packet (4 for src-only,
        8 for src/dst pairs).
    budget: control bandwidth budget in bytes per ingress packet.
    window: window size in packets.
    hier_size: 1 for plain heavy hitters, 5 or 25 for hierarchies.
    delta_s: sampling confidence parameter.
    """
    points: int
    overhead_bytes: float
    sample_bytes: float
    budget: float
    window: int
    hier_size: int = 1
    delta_s: float = 1e-4

    def __post_init__(self):
        if min(self.points, self.overhead_bytes, self.sample_bytes,
               self.budget, self.window, self.hier_size) <= 0:
            raise ConfigError("all deployment parameters must be positive")
        if not 0 < self.delta_s < 1:
            raise ConfigError("delta_s must be in (0, 1)")


@dataclass(frozen=True)
class ErrorBudget:
    """Error decomposition for one batch size choice."""
    batch_size: int
    tau: float
    delay_error: float
    sampling_error: float
    total_error: float
    tau_clamped: bool = False

    def as_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "tau": self.tau,
            "delay_error": self.delay_error,
            "sampling_error": self.sampling_error,
            "total_error": self.total_error,
            "tau_clamped": self.tau_clamped,
        }


def error_bound(batch_size: int, params: DeploymentParams) -> ErrorBudget:
    """Guaranteed packet error when each point reports batch_size samples
    per message under the bandwidth budget. batch_size = 1 gives the
    single-sample-per-report method's bound."""
    if batch_size < 1:
        raise ConfigError("batch size must be at least 1")
    b = batch_size
    msg_bytes = params.overhead_bytes + params.sample_bytes * b
    tau = params.budget * b / msg_bytes
    clamped = tau > 1.0
    if clamped:
        tau = 1.0
    delay = params.points * msg_bytes / params.budget
    z = z_score(1.0 - params.delta_s / 2.0)
    sampling = math.sqrt(
        params.hier_size * params.window * z * msg_bytes
        / (params.budget * b))
    return ErrorBudget(batch_size=b, tau=tau, delay_error=delay,
                       sampling_error=sampling,
                       total_error=delay + sampling, tau_clamped=clamped)


def optimal_batch(params: DeploymentParams, b_max: int = 10 ** 6
                  ) -> ErrorBudget:
    """Integer batch size minimizing the total error bound over
    [1, b_max]. Ternary search on the continuous relaxation, then the
    neighboring integers; falls back to an exhaustive scan if the
    sampled objective is not unimodal. Ties break toward smaller b."""
    if b_max < 2:
        raise ConfigError("b_max must be at least 2")

    def total(b: float) -> float:
        msg_bytes = params.overhead_bytes + params.sample_bytes * b
        z = z_score(1.0 - params.delta_s / 2.0)
        return (params.points * msg_bytes / params.budget
                + math.sqrt(params.hier_size * params.window * z
                            * msg_bytes / (params.budget * b)))

    if not _looks_unimodal(total, 1, b_max):
        best = min(range(1, b_max + 1), key=lambda b: (total(b), b))
        return error_bound(best, params)

    lo, hi = 1.0, float(b_max)
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if total(m1) <= total(m2):
            hi = m2
        else:
            lo = m1
    center = int(round((lo + hi) / 2.0))
    candidates = [b for b in (center - 1, center, center + 1)
                  if 1 <= b <= b_max]
    best = min(candidates, key=lambda b: (total(b), b))
    return error_bound(best, params)


def _looks_unimodal(f, lo: int, hi: int, samples: int = 64) -> bool:
    """Sample discrete difference signs on a geometric grid; more than
    one decrease-to-increase flip means the shape is not unimodal."""
    points = sorted({lo, hi} | {
        int(round(lo * (hi / lo) ** (i / (samples - 1))))
        for i in range(samples)}) if hi > lo else [lo]
    values = [f(b) for b in points]
    flips = 0
    prev_sign = None
    for a, b in zip(values, values[1:]):
        sign = (b > a) - (b < a)
        if sign == 0:
            continue
        if prev_sign is not None and sign != prev_sign:
            flips += 1
        prev_sign = sign
    return flips <= 1
