from .compare import CompareReport, CompareRow, analytic_bundle, compare
from .config import (
    ArrivalKind,
    ArrivalSpec,
    Estimate,
    RngStream,
    SimConfig,
    SimStats,
)
from .engine import (
    HAVE_COMPILED,
    active_kernel,
    empirical_service_time,
    simulate,
    total_variation,
)

__all__ = [
    "ArrivalKind", "ArrivalSpec", "CompareReport", "CompareRow", "Estimate",
    "HAVE_COMPILED", "RngStream", "SimConfig", "SimStats", "active_kernel",
    "analytic_bundle", "compare", "empirical_service_time", "simulate",
    "total_variation",
]
