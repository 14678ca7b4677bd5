"""Cross-validation of closed-form metrics against simulation estimates."""

import math
from dataclasses import dataclass

from .. import finite, infinite
from .config import SimConfig
from .engine import simulate


@dataclass(frozen=True)
class CompareRow:
    metric: str
    analytic: float
    simulated: float
    ci_half_width: float
    stderr: float
    z_score: float
    flagged: bool


@dataclass(frozen=True)
class CompareReport:
    theta: float
    buffer_K: int | None
    rows: tuple

    @property
    def any_flagged(self):
        return any(r.flagged for r in self.rows)

    def to_dict(self):
        return {
            "schema": "blockfade.compare/1",
            "theta": self.theta,
            "buffer_K": self.buffer_K,
            "any_flagged": self.any_flagged,
            "rows": [vars(r) for r in self.rows],
        }

    def to_text(self):
        lines = [f"theta={self.theta:g}"
                 + (f" K={self.buffer_K}" if self.buffer_K is not None else " (infinite buffer)")]
        hdr = (f"{'metric':<22}{'analytic':>14}{'simulated':>14}"
               f"{'ci95':>12}{'stderr':>12}{'z':>9}  flag")
        lines.append(hdr)
        lines.append("-" * len(hdr))
        for r in self.rows:
            lines.append(
                f"{r.metric:<22}{r.analytic:>14.6g}{r.simulated:>14.6g}"
                f"{r.ci_half_width:>12.3g}{r.stderr:>12.3g}{r.z_score:>9.2f}"
                f"  {'***' if r.flagged else ''}")
        return "\n".join(lines)


def analytic_bundle(theta, buffer_K=None):
    """Closed-form targets for the metrics the simulator estimates.

    Idle periods are buffer-independent (empty-queue dynamics never see
    the cap), so the idle target always applies; busy periods are
    truncated by a finite buffer and get no closed-form target there.

    The finite-buffer queue target adds the overflow probability to the
    stationary-law mean: the simulator counts every unfinished packet,
    including the transient (K+1)-th occupancy whose block fraction
    equals the drop fraction exactly. The delay target then follows from
    Little's law for the accepted-packet stream (rate 1 - P per block)
    plus the vestige time, whose law does not depend on the buffer.
    """
    out = {
        "theta": theta,
        "mean_idle": infinite.busy_idle_stats(theta).mean_idle,
    }
    if buffer_K is None:
        out["mean_busy"] = infinite.busy_idle_stats(theta).mean_busy
        out["mean_queue"] = infinite.mean_queue_length(theta)
        out["mean_delay"] = infinite.mean_delay(theta).mean_total
    else:
        p_drop = finite.overflow_probability(theta, buffer_K)
        out["drop_fraction"] = p_drop
        if buffer_K >= 1:
            mean_count = finite.finite_mean_queue(theta, buffer_K) + p_drop
            out["mean_queue"] = mean_count
            out["mean_delay"] = (mean_count / (1.0 - p_drop)
                                 + infinite.mean_vestige(theta))
    return out


def compare(cfg: SimConfig, bundle=None, kernel="auto") -> CompareReport:
    """Simulate cfg and tabulate z-scores against the analytic bundle.

    Any |z| > 3 is flagged. Raises on a theta mismatch between the bundle
    and the configuration.
    """
    if bundle is None:
        bundle = analytic_bundle(cfg.load.theta, cfg.buffer_K)
    if not math.isclose(bundle.get("theta", cfg.load.theta), cfg.load.theta,
                        rel_tol=1e-12):
        raise ValueError("analytic bundle theta does not match the configuration")
    stats = simulate(cfg, kernel=kernel)
    pairs = [
        ("mean_queue", stats.mean_queue_at_block_start),
        ("mean_busy", stats.mean_busy),
        ("mean_idle", stats.mean_idle),
        ("mean_delay", stats.mean_delay),
    ]
    if cfg.buffer_K is not None and stats.drop_fraction is not None:
        pairs.append(("drop_fraction", stats.drop_fraction))
    rows = []
    for name, estimate in pairs:
        if name not in bundle:
            continue
        target = bundle[name]
        z = ((estimate.value - target) / estimate.stderr
             if estimate.stderr and not math.isnan(estimate.stderr) else math.inf)
        rows.append(CompareRow(
            metric=name,
            analytic=target,
            simulated=estimate.value,
            ci_half_width=estimate.half_width,
            stderr=estimate.stderr,
            z_score=z,
            flagged=abs(z) > 3.0,
        ))
    return CompareReport(theta=cfg.load.theta, buffer_K=cfg.buffer_K, rows=tuple(rows))
