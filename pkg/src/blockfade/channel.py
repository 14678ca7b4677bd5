"""Physical channel parameters and the per-block service distributions.

Maps a Rayleigh block-fading link description to the dimensionless load
parameters that drive all queueing results, and exposes both the exact
logarithmic-capacity service law and its low-SNR exponential limit.
"""

import math
from dataclasses import dataclass
from enum import Enum

from .special import regularized_gamma_upper


class ServiceModel(Enum):
    LOW_SNR_EXPONENTIAL = "low_snr_exponential"
    EXACT_LOG_CAPACITY = "exact_log_capacity"


@dataclass(frozen=True)
class ChannelParams:
    """Point-to-point block-fading link description (SI units)."""

    bandwidth_W: float        # Hz
    block_length_TB: float    # s
    tx_power_P: float         # W
    noise_density_N0: float   # W/Hz
    distance_d: float         # m
    pathloss_alpha: float     # >= 2
    rayleigh_sigma2: float    # variance of each Gaussian fading component

    def __post_init__(self):
        for name in ("bandwidth_W", "block_length_TB", "tx_power_P",
                     "noise_density_N0", "distance_d", "rayleigh_sigma2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pathloss_alpha < 2:
            raise ValueError("pathloss_alpha must be >= 2")


@dataclass(frozen=True)
class LoadSpec:
    """Dimensionless queueing parameters derived from channel and traffic.

    theta is the ratio of traffic rate to low-SNR ergodic capacity,
    equivalently the mean number of service blocks per packet; the queue
    is stable only for theta < 1. nu is the mean service per block in
    nats; packets carry packet_size_Lp = theta * nu nats.
    """

    theta: float          # in (0, 1)
    nu: float             # nats per block
    rho: float            # average received SNR
    packet_size_Lp: float  # nats
    rate_R: float         # nats per second

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(
                f"queue unstable: theta must lie in (0, 1), got {self.theta}")
        if self.nu <= 0 or self.rho <= 0:
            raise ValueError("nu and rho must be positive")
        if not math.isclose(self.packet_size_Lp, self.theta * self.nu,
                            rel_tol=1e-12):
            raise ValueError("packet_size_Lp must equal theta * nu")

    @classmethod
    def from_theta(cls, theta, rho=1e-3, nu=1.0):
        """Build a load spec directly from theta for analytic studies.

        The closed-form queueing results depend on theta alone; nu fixes
        the nat scale and rho is only consulted by the exact-capacity
        service model.
        """
        return cls(theta=theta, nu=nu, rho=rho,
                   packet_size_Lp=theta * nu, rate_R=theta * nu)


@dataclass(frozen=True)
class BlockService:
    """A per-block service distribution: model choice plus its parameters.

    The exact model needs no separate channel description: W*T_B is
    recovered from the load as nu/rho.
    """

    model: ServiceModel
    load: LoadSpec


def derive_load(params: ChannelParams, rate_R: float) -> LoadSpec:
    """Derive the dimensionless load from physics and the input data rate.

    rho = 2 sigma^2 P / (W N0 d^alpha), nu = W T_B rho, L_p = R T_B and
    theta = L_p / nu = R / (W rho). Raises when the resulting load is
    unstable (theta >= 1).
    """
    if rate_R <= 0:
        raise ValueError("rate_R must be positive")
    rho = (2.0 * params.rayleigh_sigma2 * params.tx_power_P
           / (params.bandwidth_W * params.noise_density_N0
              * params.distance_d ** params.pathloss_alpha))
    nu = params.bandwidth_W * params.block_length_TB * rho
    lp = rate_R * params.block_length_TB
    theta = lp / nu
    if theta >= 1:
        raise ValueError(
            f"queue unstable: theta = {theta:.6g} >= 1 "
            f"(rate exceeds low-SNR ergodic capacity {params.bandwidth_W * rho:.6g} nats/s)")
    return LoadSpec(theta=theta, nu=nu, rho=rho, packet_size_Lp=lp, rate_R=rate_R)


def service_cdf(bs: BlockService, x: float) -> float:
    """CDF of the service provided in one block, in nats.

    Low-SNR model: 1 - exp(-x/nu). Exact model: 1 - exp(-(e^{x/(W T_B)} - 1)/rho)
    with W*T_B recovered as nu/rho.
    """
    if x < 0:
        raise ValueError("service is nonnegative")
    load = bs.load
    if bs.model is ServiceModel.LOW_SNR_EXPONENTIAL:
        return 1.0 - math.exp(-x / load.nu)
    wtb = load.nu / load.rho
    return 1.0 - math.exp(-(math.expm1(x / wtb)) / load.rho)


def k_block_service_pdf(load: LoadSpec, k: int, x: float) -> float:
    """Density of the total low-SNR service of k successive blocks.

    Gamma with shape k and scale nu: x^{k-1} e^{-x/nu} / (Gamma(k) nu^k).
    """
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if x < 0:
        raise ValueError("service is nonnegative")
    if x == 0:
        return 1.0 / load.nu if k == 1 else 0.0
    lg = (k - 1) * math.log(x) - x / load.nu - math.lgamma(k) - k * math.log(load.nu)
    return math.exp(lg)


def prob_served_within_k_blocks(load: LoadSpec, k: int) -> float:
    """Pr{S_k <= L_p}: chance the accumulated k-block service covers one packet."""
    return 1.0 - regularized_gamma_upper(k, load.theta)
