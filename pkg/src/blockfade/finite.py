"""Closed-form results for the finite-buffer model.

A buffer of size K holds up to K packets behind the one in transmission;
an arriving packet that finds all K waiting slots occupied is dropped
whole. The stationary law, mean queue length, mean delay and the
overflow probability all derive from the infinite-model tail weights
phi_k rescaled by eta = 1/(1 - theta phi_K).
"""

from dataclasses import dataclass

import numpy as np

from .infinite import (
    DEFAULT_SERIES_TOL,
    DelayBreakdown,
    _check_theta,
    mean_vestige,
    phi,
)


def _check_K(K, minimum=1):
    if K < minimum or K != int(K):
        raise ValueError(f"buffer size K must be an integer >= {minimum}, got {K}")
    return int(K)


@dataclass(frozen=True)
class FiniteQueueDistribution:
    """Stationary block-level queue-length law of the finite-buffer model."""

    theta: float
    buffer_K: int
    probabilities: np.ndarray
    eta: float  # normalizing ratio 1/(1 - theta phi_K)

    def __len__(self):
        return len(self.probabilities)


def finite_stationary(theta, K, tol=DEFAULT_SERIES_TOL):
    """Stationary queue-length distribution over 0..K.

    pi_j = (phi_{j-1} - phi_j) * eta for j < K and
    pi_K = (phi_{K-1} - theta phi_K) * eta, with eta = 1/(1 - theta phi_K).
    States below K stay proportional to the infinite-model law.
    """
    _check_theta(theta)
    K = _check_K(K)
    phis = [phi(theta, k, tol) for k in range(-1, K + 1)]
    eta = 1.0 / (1.0 - theta * phis[K + 1])
    probs = np.empty(K + 1)
    for j in range(K):
        probs[j] = (phis[j] - phis[j + 1]) * eta
    probs[K] = (phis[K] - theta * phis[K + 1]) * eta
    return FiniteQueueDistribution(theta=theta, buffer_K=K,
                                   probabilities=probs, eta=eta)


def finite_mean_queue(theta, K, tol=DEFAULT_SERIES_TOL):
    """Mean queue length (sum_{j<K} phi_j - K theta phi_K) / (1 - theta phi_K)."""
    _check_theta(theta)
    K = _check_K(K)
    phis = [phi(theta, k, tol) for k in range(K + 1)]
    return (sum(phis[:K]) - K * theta * phis[K]) / (1.0 - theta * phis[K])


def finite_mean_delay(theta, K, tol=DEFAULT_SERIES_TOL):
    """Mean delay of accepted packets: queue length by Little's law plus vestige.

    Composed as E[D] = E[L] + E[V] with the infinite-model vestige time
    (integrand (x-1), matching the K -> infinity limit). The service share
    is theta and waiting is the remainder of the Little's-law term.
    """
    mean_q = finite_mean_queue(theta, K, tol)
    return DelayBreakdown(
        mean_service=theta,
        mean_wait=mean_q - theta,
        mean_vestige=mean_vestige(theta),
    )


def overflow_probability(theta, K, tol=DEFAULT_SERIES_TOL):
    """Long-run fraction of arriving packets dropped: (1-theta) phi_K / (1 - theta phi_K).

    K = 0 is admitted as a pure formula extension (a link with no waiting
    room, where it reduces to theta/(1+theta)).
    """
    _check_theta(theta)
    K = _check_K(K, minimum=0)
    phiK = phi(theta, K, tol)
    return (1.0 - theta) * phiK / (1.0 - theta * phiK)
