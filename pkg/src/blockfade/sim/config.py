"""Monte-Carlo experiment description, RNG streams, and result containers."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..channel import LoadSpec, ServiceModel


class ArrivalKind(Enum):
    CONSTANT_ONE_PER_BLOCK = "constant"
    POISSON = "poisson"


@dataclass(frozen=True)
class ArrivalSpec:
    kind: ArrivalKind = ArrivalKind.CONSTANT_ONE_PER_BLOCK
    lam: float = 1.0  # packets per block, Poisson only

    def __post_init__(self):
        if self.kind is ArrivalKind.POISSON and self.lam <= 0:
            raise ValueError("Poisson arrival rate must be positive")


@dataclass(frozen=True)
class RngStream:
    """Reproducible counter-based stream: (seed, stream_id) fixes all draws."""

    seed: int
    stream_id: int

    def generator(self):
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SimConfig:
    load: LoadSpec
    service_model: ServiceModel = ServiceModel.LOW_SNR_EXPONENTIAL
    buffer_K: int | None = None       # None = infinite buffer
    arrival: ArrivalSpec = field(default_factory=ArrivalSpec)
    total_blocks: int = 1_000_000     # per replication, after warmup
    warmup_blocks: int = 10_000
    seed: int = 0
    replications: int = 10

    def __post_init__(self):
        if self.total_blocks < 10_000:
            raise ValueError("total_blocks must be at least 10^4")
        if self.warmup_blocks < 0 or self.warmup_blocks >= self.total_blocks:
            raise ValueError("warmup_blocks must lie in [0, total_blocks)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.buffer_K is not None and self.buffer_K < 0:
            raise ValueError("buffer_K must be >= 0")
        if self.arrival.kind is ArrivalKind.POISSON:
            if self.arrival.lam * self.load.theta >= 1.0:
                raise ValueError(
                    "queue unstable: lambda * theta must be < 1 for Poisson arrivals")


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a 95% confidence half-width across units."""

    value: float
    half_width: float
    stderr: float
    n_units: int

    def covers(self, target):
        return abs(self.value - target) <= self.half_width


@dataclass(frozen=True)
class SimStats:
    config: SimConfig
    kernel: str
    mean_queue_at_block_start: Estimate
    mean_busy: Estimate
    mean_idle: Estimate
    mean_delay: Estimate              # whole blocks + residual-convention vestige
    mean_delay_physical: Estimate     # true fractional departure instant
    mean_delay_whole_blocks: Estimate
    queue_length_histogram: np.ndarray
    empirical_service_time_pmf: np.ndarray
    drop_fraction: Estimate | None = None
    blocks: int = 0
    offered: int = 0
    admitted: int = 0
    departed: int = 0
    dropped: int = 0
