"""Closed-form results for the infinite-buffer model.

Stationary queue-length law (via the tail-weight series phi_k), busy and
idle periods through the Lambert W function, and the mean packet delay
including the vestige time.
"""

import math
from dataclasses import dataclass

import numpy as np

from .special import (
    ConvergenceError,
    integrate_unit_interval,
    lambert_w0,
    poisson_pmf,
)

DEFAULT_SERIES_TOL = 1e-12
SERIES_TERM_BUDGET = 100_000


def _check_theta(theta, lo_open=True):
    if not (0 < theta < 1 if lo_open else 0 <= theta < 1):
        raise ValueError(f"theta must lie in {'(0,1)' if lo_open else '[0,1)'}, got {theta}")


@dataclass(frozen=True)
class ServiceTimePMF:
    """Integer service-time law of one packet: Poisson with mean theta."""

    theta: float

    def __post_init__(self):
        _check_theta(self.theta)

    def pmf(self, k):
        return poisson_pmf(k, self.theta)

    @property
    def mean(self):
        return self.theta

    def pgf(self, z):
        return math.exp(self.theta * (z - 1.0))


@dataclass(frozen=True)
class QueueDistribution:
    """Stationary queue-length PMF with explicit truncation tail mass."""

    theta: float
    probabilities: np.ndarray
    tail_mass: float
    truncation_tol: float

    def __len__(self):
        return len(self.probabilities)


@dataclass(frozen=True)
class DelayBreakdown:
    """Mean packet delay split into service, waiting and vestige parts (blocks)."""

    mean_service: float
    mean_wait: float
    mean_vestige: float

    @property
    def mean_total(self):
        return self.mean_service + self.mean_wait + self.mean_vestige


@dataclass(frozen=True)
class BusyIdleStats:
    theta: float
    mean_busy: float
    mean_idle: float
    packets_per_busy: float

    def pgf_at(self, z):
        """PGF of the busy-period length, B(z) = -W0(-theta z e^-theta)/(theta z)."""
        if not 0 < z <= 1:
            raise ValueError(f"busy-period PGF defined on (0, 1], got z={z}")
        return -lambert_w0(-self.theta * z * math.exp(-self.theta)) / (self.theta * z)


def queue_pgf(theta, z):
    """PGF of the stationary queue length, (1-theta)(1-z)/(1 - z e^{theta(1-z)}).

    The removable singularity at z = 1 returns its analytic limit 1.
    """
    _check_theta(theta)
    if not 0 <= z <= 1:
        raise ValueError(f"z must lie in [0, 1], got {z}")
    if abs(1.0 - z) < 1e-9:
        # first-order expansion about z=1: L(z) = 1 - E[L](1-z) + O((1-z)^2)
        return 1.0 - mean_queue_length(theta) * (1.0 - z)
    return (1.0 - theta) * (1.0 - z) / (1.0 - z * math.exp(theta * (1.0 - z)))


def mean_queue_length(theta):
    """E[L] = theta (2 - theta) / (2 (1 - theta))."""
    _check_theta(theta)
    return theta * (2.0 - theta) / (2.0 * (1.0 - theta))


def variance_queue_length(theta):
    """Var[L] = (12 theta - 18 theta^2 + 10 theta^3 - theta^4) / (12 (1-theta)^2)."""
    _check_theta(theta)
    num = 12.0 * theta - 18.0 * theta**2 + 10.0 * theta**3 - theta**4
    return num / (12.0 * (1.0 - theta) ** 2)


def phi(theta, k, tol=DEFAULT_SERIES_TOL):
    """Tail weight phi_k of the stationary law; phi_{-1} = 1 by definition.

    phi_k = (1-theta) * sum_{j>=1} (j theta)^{k+j} e^{-j theta} / (k+j)!
    with terms computed in log space. The stationary PMF telescopes as
    pi_k = phi_{k-1} - phi_k and the tail above K is exactly phi_K.

    Successive terms approach a ratio of theta*e^{1-theta} < 1, so the
    series converges for every theta in (0,1) but slowly near 1; the term
    budget turns silent inaccuracy into an explicit error there.
    """
    _check_theta(theta)
    if k < -1 or k != int(k):
        raise ValueError(f"k must be an integer >= -1, got {k}")
    if k == -1:
        return 1.0
    k = int(k)
    log_theta = math.log(theta)
    # successive term ratios increase toward r = theta*e^(1-theta) < 1, so the
    # remaining tail after the j-th term is at most term * r/(1-r)
    r = theta * math.exp(1.0 - theta)
    tail_factor = r / (1.0 - r)
    total = 0.0
    for j in range(1, SERIES_TERM_BUDGET + 1):
        lt = (k + j) * (math.log(j) + log_theta) - j * theta - math.lgamma(k + j + 1)
        term = math.exp(lt)
        total += term
        if j >= 10 and term * tail_factor < tol * total:
            return (1.0 - theta) * total
    raise ConvergenceError(
        f"phi series needs more than {SERIES_TERM_BUDGET} terms at theta={theta}")


def stationary_pmf(theta, max_k=30, tol=DEFAULT_SERIES_TOL):
    """Stationary queue-length PMF pi_0..pi_max_k plus the exact tail mass.

    pi_k = phi_{k-1} - phi_k, so the entries and tail telescope to 1.
    """
    _check_theta(theta)
    phis = [phi(theta, k, tol) for k in range(-1, max_k + 1)]
    probs = np.diff(phis) * -1.0  # phi_{k-1} - phi_k
    return QueueDistribution(theta=theta, probabilities=probs,
                             tail_mass=phis[-1], truncation_tol=tol)


def busy_idle_stats(theta):
    """Busy/idle period statistics.

    E[B] = theta/(1-theta), E[I] = 1/(e^theta - 1), and 1/(1-theta)
    packets are served per busy period. The PGF uses the principal
    Lambert branch: it is the only branch with B(1) = 1 and |B| <= 1.
    """
    _check_theta(theta)
    return BusyIdleStats(
        theta=theta,
        mean_busy=theta / (1.0 - theta),
        mean_idle=1.0 / math.expm1(theta),
        packets_per_busy=1.0 / (1.0 - theta),
    )


def mean_vestige(theta, tol=1e-12):
    """Mean vestige time E[V] = 1/2 + integral_0^1 (x-1) e^{-theta/x} dx.

    The fractional final block a packet occupies after its integer service
    time, under the residual-as-fresh-block convention. Lies in [0, 0.5)
    and increases with theta; exactly 0 at theta = 0.
    """
    _check_theta(theta, lo_open=False)
    if theta == 0.0:
        return 0.0

    def integrand(x):
        return (x - 1.0) * np.exp(-theta / x)

    r = integrate_unit_interval(integrand, tol=tol)
    return 0.5 + r.value


def mean_delay(theta):
    """Mean packet delay split per D = T + W + V.

    mean_service = theta, mean_wait = theta^2/(2(1-theta)) (so that
    service plus waiting equals the mean queue length, by Little's law),
    and the vestige from mean_vestige. The total equals
    1/2 + theta + theta^2/(2(1-theta)) + integral_0^1 (x-1)e^{-theta/x} dx.
    """
    _check_theta(theta)
    return DelayBreakdown(
        mean_service=theta,
        mean_wait=theta * theta / (2.0 * (1.0 - theta)),
        mean_vestige=mean_vestige(theta),
    )


def virtual_overflow(theta, K, tol=DEFAULT_SERIES_TOL):
    """Tail mass Pr{L > K} = phi_K of the infinite-buffer stationary law."""
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    return phi(theta, K, tol)
