"""blockfade: queueing characterization of buffer-aided low-SNR block
Rayleigh fading links.

Closed-form stationary queue laws, busy/idle statistics, packet delay and
finite-buffer overflow probability, cross-checked by an embedded-Markov-
chain oracle and a Monte-Carlo simulator of the continuous-state queue.
"""

__version__ = "0.1.0"

from .channel import (
    BlockService,
    ChannelParams,
    LoadSpec,
    ServiceModel,
    derive_load,
    k_block_service_pdf,
    service_cdf,
)
from .finite import (
    FiniteQueueDistribution,
    finite_mean_delay,
    finite_mean_queue,
    finite_stationary,
    overflow_probability,
)
from .infinite import (
    BusyIdleStats,
    DelayBreakdown,
    QueueDistribution,
    ServiceTimePMF,
    busy_idle_stats,
    mean_delay,
    mean_queue_length,
    mean_vestige,
    phi,
    queue_pgf,
    stationary_pmf,
    variance_queue_length,
    virtual_overflow,
)
from .markov import (
    TransitionMatrix,
    build_finite,
    build_infinite_truncated,
    build_poisson_arrivals,
    departure_to_block_law,
    solve_stationary,
)
from .special import (
    ConvergenceError,
    QuadratureResult,
    integrate_unit_interval,
    lambert_w0,
    lambert_wm1,
    poisson_pmf,
    regularized_gamma_upper,
)
