"""Embedded-Markov-chain oracle for the queue-length laws.

Builds the departure-epoch transition matrices (truncated infinite,
finite, and the Poisson-arrival variant) and solves them numerically,
independently of the closed-form series. Because the finite chain is
embedded at departures while the closed-form finite law lives at block
boundaries, a work-conservation conversion between the two laws is
provided as well.
"""

from dataclasses import dataclass

import numpy as np

from .special import ConvergenceError, poisson_pmf

DENSE_SOLVE_LIMIT = 2000
STATIONARY_RESIDUAL = 1e-12


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic dense transition matrix of the queue at departures."""

    rows: np.ndarray

    @property
    def size(self):
        return self.rows.shape[0]

    def __post_init__(self):
        r = self.rows
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 2:
            raise ValueError("transition matrix must be square with size >= 2")
        if np.any(r < -1e-15) or np.any(r > 1 + 1e-15):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(r.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("every row must sum to 1")


def _banded(jump_pmf, size):
    """Assemble the departure-epoch chain from a one-step jump pmf.

    Rows 0 and 1 are identical; row i (i >= 2) is row 1 shifted right by
    i-1. The last column absorbs the residual tail mass so each row stays
    stochastic; truncation therefore only biases states near the edge.
    """
    p = np.asarray(jump_pmf, dtype=float)
    m = np.zeros((size, size))
    m[0, : size - 1] = p[: size - 1]
    m[0, size - 1] = 1.0 - m[0, : size - 1].sum()
    m[1] = m[0]
    for i in range(2, size):
        width = size - 1 - (i - 1)
        m[i, i - 1 : size - 1] = p[:width]
        m[i, size - 1] = 1.0 - m[i, : size - 1].sum()
    return TransitionMatrix(rows=m)


def build_infinite_truncated(theta, size):
    """Truncated chain of the infinite-buffer model with Poisson(theta) jumps."""
    if size < 2:
        raise ValueError("size must be >= 2")
    p = [poisson_pmf(k, theta) for k in range(size)]
    return _banded(p, size)


def build_finite(theta, K):
    """Exact (K+1)x(K+1) chain of the finite-buffer model.

    The tail column holds phat_k = Pr{service time >= k}, which is what
    row-stochasticity requires.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    p = [poisson_pmf(k, theta) for k in range(K + 1)]
    return _banded(p, K + 1)


def neyman_type_a_pmf(theta, lam, n):
    """First n+1 probabilities of a Poisson(theta)-stopped sum of Poisson(lam).

    Stopped-sum recursion, O(i) per term and numerically stable:
    q_0 = exp(theta (e^-lam - 1)),
    q_{i+1} = (theta lam e^-lam / (i+1)) * sum_r (lam^r / r!) q_{i-r}.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    q = np.zeros(n + 1)
    q[0] = np.exp(theta * np.expm1(-lam))
    lam_pow = np.ones(n + 1)  # lam^r / r!
    for r in range(1, n + 1):
        lam_pow[r] = lam_pow[r - 1] * lam / r
    coef = theta * lam * np.exp(-lam)
    for i in range(n):
        q[i + 1] = coef / (i + 1) * np.dot(lam_pow[: i + 1], q[i::-1])
    return q


def build_poisson_arrivals(theta, lam, size):
    """Truncated chain when each block brings a Poisson(lam) packet count.

    Same band structure as the constant-arrival chain, with the compound
    (Neyman Type A) jump law in place of Poisson(theta).
    """
    if size < 2:
        raise ValueError("size must be >= 2")
    q = neyman_type_a_pmf(theta, lam, size - 1)
    return _banded(q, size)


def solve_stationary(m: TransitionMatrix):
    """Stationary probability vector: pi P = pi, sum pi = 1.

    Dense linear solve of (P^T - I) with a normalization row; power
    iteration as a fallback for large or ill-conditioned systems. The
    returned vector satisfies the residual bound or an error is raised.
    """
    P = m.rows
    n = m.size
    pi = None
    if n <= DENSE_SOLVE_LIMIT:
        A = P.T - np.eye(n)
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            pi = None
        if pi is not None and (np.any(pi < -1e-12) or _residual(pi, P) > STATIONARY_RESIDUAL):
            pi = None
    if pi is None:
        pi = _power_iteration(P)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    res = _residual(pi, P)
    if res > STATIONARY_RESIDUAL:
        raise ConvergenceError(f"stationary solve residual {res:.3e} above target")
    return pi


def _residual(pi, P):
    return float(np.max(np.abs(pi @ P - pi)))


def _power_iteration(P, max_iter=200_000):
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 1e-16:
            return nxt
        pi = nxt
    return pi


def departure_to_block_law(dep_law, theta):
    """Convert the departure-epoch stationary law to the block-epoch law.

    The finite chain is embedded at departures, but the closed-form
    finite-buffer distribution describes queue lengths at block
    boundaries. Work conservation links the two: each departure interval
    spans one block per unit of service, plus one extra block when it
    starts from an empty queue, so arrivals per block = 1 implies a drop
    fraction P = (theta + d0 - 1)/(theta + d0) where d0 is the
    departure-law empty probability. The block-level empty probability is
    then 1 - (1 - P) theta, states below K keep the departure-law ratios,
    and the top state absorbs the remainder.
    """
    d = np.asarray(dep_law, dtype=float)
    K = len(d) - 1
    p_drop = (theta + d[0] - 1.0) / (theta + d[0])
    scale = (1.0 - (1.0 - p_drop) * theta) / d[0]
    out = np.empty_like(d)
    out[:K] = scale * d[:K]
    out[K] = 1.0 - out[:K].sum()
    return out


def drop_fraction_from_departure_law(dep_law, theta):
    """Overflow probability implied by the departure-epoch law alone."""
    d0 = float(np.asarray(dep_law)[0])
    return (theta + d0 - 1.0) / (theta + d0)
