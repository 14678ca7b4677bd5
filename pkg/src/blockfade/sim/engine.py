"""Monte-Carlo engine: drives a block-stepping kernel over replications.

The hot loop lives in a compiled Cython kernel when available, with the
pure-Python module as an always-present fallback; both consume the same
pre-drawn random arrays in the same order, so results are bit-identical
whichever is selected.
"""

import math

import numpy as np
from scipy import stats as sps

from ..channel import ServiceModel
from . import _kernel_py
from ._kernel_py import (
    BLOCKS, DRESID, DPHYS, DROPS, DSAMP, DWHOLE,
    N_ACC_D, N_ACC_I, N_STATE_I, NBUSY, NC0, NRUNS, OFFERED, SUMQ,
    COUNT as ST_COUNT, HEAD as ST_HEAD, TADM, TDEP, TDROP, TOFF,
)
from .config import ArrivalKind, Estimate, RngStream, SimConfig, SimStats

try:
    from . import _kernel
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _kernel = None
    HAVE_COMPILED = False

CHUNK_BLOCKS = 1 << 18
COUNT_HIST_BINS = 512
SERVICE_HIST_BINS = 64
BATCHES_SINGLE_REP = 100


def active_kernel(kernel="auto"):
    """Resolve the kernel module: 'auto', 'compiled' or 'python'."""
    if kernel == "auto":
        return _kernel if HAVE_COMPILED else _kernel_py
    if kernel == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel is not available; rebuild the package")
        return _kernel
    if kernel == "python":
        return _kernel_py
    raise ValueError(f"unknown kernel {kernel!r}")


def draw_capacities(rng, load, model, n):
    """Per-block channel service in nats; identical order for both kernels."""
    if model is ServiceModel.LOW_SNR_EXPONENTIAL:
        return rng.exponential(load.nu, n)
    # exact log capacity: s = W*T_B * ln(1 + rho * E), E ~ Exp(1)
    e = rng.exponential(1.0, n)
    return (load.nu / load.rho) * np.log1p(load.rho * e)


class _RepState:
    """Mutable per-replication queue state shared by both kernels."""

    def __init__(self, ring_capacity=1 << 12):
        self.state_i = np.zeros(N_STATE_I, dtype=np.int64)
        self.state_d = np.zeros(1, dtype=np.float64)
        self.arr_time = np.zeros(ring_capacity, dtype=np.float64)
        self.first_touch = np.zeros(ring_capacity, dtype=np.int64)

    def ensure_capacity(self, incoming):
        need = int(self.state_i[ST_COUNT]) + incoming + 2
        cap = len(self.arr_time)
        if need <= cap:
            return
        new_cap = cap
        while new_cap < need:
            new_cap *= 2
        at = np.zeros(new_cap, dtype=np.float64)
        ft = np.zeros(new_cap, dtype=np.int64)
        head = int(self.state_i[ST_HEAD])
        count = int(self.state_i[ST_COUNT])
        idx = (head + np.arange(count)) % cap
        at[:count] = self.arr_time[idx]
        ft[:count] = self.first_touch[idx]
        self.arr_time, self.first_touch = at, ft
        self.state_i[ST_HEAD] = 0

    @property
    def queued_packets(self):
        return int(self.state_i[ST_COUNT])


class _Accum:
    def __init__(self):
        self.i = np.zeros(N_ACC_I, dtype=np.int64)
        self.d = np.zeros(N_ACC_D, dtype=np.float64)
        self.count_hist = np.zeros(COUNT_HIST_BINS, dtype=np.int64)
        self.service_hist = np.zeros(SERVICE_HIST_BINS, dtype=np.int64)

    def metrics(self):
        """Per-batch point metrics; NaN marks an unobservable ratio."""
        i, d = self.i, self.d
        out = {
            "mean_queue": d[SUMQ] / i[BLOCKS] if i[BLOCKS] else math.nan,
            "mean_busy": i[NBUSY] / i[NC0] if i[NC0] else math.nan,
            "mean_idle": i[NC0] / i[NRUNS] - 1.0 if i[NRUNS] else math.nan,
            "mean_delay": d[DRESID] / i[DSAMP] if i[DSAMP] else math.nan,
            "mean_delay_physical": d[DPHYS] / i[DSAMP] if i[DSAMP] else math.nan,
            "mean_delay_whole": d[DWHOLE] / i[DSAMP] if i[DSAMP] else math.nan,
            "drop_fraction": i[DROPS] / i[OFFERED] if i[OFFERED] else math.nan,
        }
        return out


def _run_blocks(kmod, rng, cfg, state, n_blocks, accumulate, acc, trace=None):
    lp = cfg.load.packet_size_Lp
    bufK = -1 if cfg.buffer_K is None else cfg.buffer_K
    poisson = cfg.arrival.kind is ArrivalKind.POISSON
    done = 0
    while done < n_blocks:
        n = min(CHUNK_BLOCKS, n_blocks - done)
        caps = draw_capacities(rng, cfg.load, cfg.service_model, n)
        if poisson:
            arrivals = rng.poisson(cfg.arrival.lam, n).astype(np.int64)
        else:
            arrivals = np.ones(n, dtype=np.int64)
        state.ensure_capacity(int(arrivals.sum()))
        args = (caps, arrivals, lp, bufK, accumulate,
                state.state_i, state.state_d, state.arr_time, state.first_touch,
                acc.i, acc.d, acc.count_hist, acc.service_hist)
        if trace is not None:
            _kernel_py.run_chunk(*args, trace=trace)
        else:
            kmod.run_chunk(*args)
        done += n


def simulate(cfg: SimConfig, kernel="auto", trace=None) -> SimStats:
    """Run the experiment described by cfg and aggregate statistics.

    Confidence intervals are Student-t at 95% across replications, or
    across 100 batch means when replications == 1. Tracing forces the
    reference Python kernel.
    """
    kmod = _kernel_py if trace is not None else active_kernel(kernel)
    unit_metrics = []
    pooled = _Accum()
    totals = np.zeros(N_STATE_I, dtype=np.int64)

    for rep in range(cfg.replications):
        rng = RngStream(cfg.seed, rep).generator()
        state = _RepState()
        warm_acc = _Accum()
        if cfg.warmup_blocks:
            _run_blocks(kmod, rng, cfg, state, cfg.warmup_blocks, False, warm_acc,
                        trace=trace)
        if cfg.replications == 1:
            batch = cfg.total_blocks // BATCHES_SINGLE_REP
            sizes = [batch] * (BATCHES_SINGLE_REP - 1)
            sizes.append(cfg.total_blocks - batch * (BATCHES_SINGLE_REP - 1))
            for sz in sizes:
                acc = _Accum()
                _run_blocks(kmod, rng, cfg, state, sz, True, acc, trace=trace)
                unit_metrics.append(acc.metrics())
                _merge(pooled, acc)
        else:
            acc = _Accum()
            _run_blocks(kmod, rng, cfg, state, cfg.total_blocks, True, acc,
                        trace=trace)
            unit_metrics.append(acc.metrics())
            _merge(pooled, acc)
        totals += state.state_i
        admitted = int(state.state_i[TADM])
        departed = int(state.state_i[TDEP])
        if admitted != departed + state.queued_packets:
            raise AssertionError(
                "packet conservation violated: "
                f"admitted={admitted} departed={departed} backlog={state.queued_packets}")

    def est(name):
        vals = np.array([m[name] for m in unit_metrics], dtype=float)
        vals = vals[~np.isnan(vals)]
        n = len(vals)
        if n == 0:
            return Estimate(math.nan, math.nan, math.nan, 0)
        mean = float(vals.mean())
        if n == 1:
            return Estimate(mean, math.nan, math.nan, 1)
        se = float(vals.std(ddof=1) / math.sqrt(n))
        half = float(sps.t.ppf(0.975, n - 1) * se)
        return Estimate(mean, half, se, n)

    qh = pooled.count_hist.astype(float)
    sh = pooled.service_hist.astype(float)
    return SimStats(
        config=cfg,
        kernel=getattr(kmod, "KERNEL_NAME", "python"),
        mean_queue_at_block_start=est("mean_queue"),
        mean_busy=est("mean_busy"),
        mean_idle=est("mean_idle"),
        mean_delay=est("mean_delay"),
        mean_delay_physical=est("mean_delay_physical"),
        mean_delay_whole_blocks=est("mean_delay_whole"),
        queue_length_histogram=qh / qh.sum() if qh.sum() else qh,
        empirical_service_time_pmf=sh / sh.sum() if sh.sum() else sh,
        drop_fraction=est("drop_fraction") if cfg.buffer_K is not None else None,
        blocks=int(pooled.i[BLOCKS]),
        offered=int(totals[TOFF]),
        admitted=int(totals[TADM]),
        departed=int(totals[TDEP]),
        dropped=int(totals[TDROP]),
    )


def _merge(pooled, acc):
    pooled.i += acc.i
    pooled.d += acc.d
    pooled.count_hist += acc.count_hist
    pooled.service_hist += acc.service_hist


def empirical_service_time(load, model=ServiceModel.LOW_SNR_EXPONENTIAL,
                           n_packets=1_000_000, seed=0, max_t=SERVICE_HIST_BINS):
    """Integer service-time PMF of a saturated (infinite-backlog) stream.

    Packets of L_p nats are served back to back; a packet's service time
    is the number of block boundaries it crosses, i.e. completion block
    minus first-touch block, which under the memoryless low-SNR model is
    Poisson(theta). Vectorized over pre-drawn capacities. A SimConfig may
    be passed in place of the load; its model and seed then apply.
    """
    if isinstance(load, SimConfig):
        model = load.service_model
        seed = load.seed
        load = load.load
    rng = RngStream(seed, 0).generator()
    lp = load.packet_size_Lp
    target = n_packets * lp
    chunks = []
    total = 0.0
    est = int(target / load.nu * 1.1) + 1024
    while total < target:
        caps = draw_capacities(rng, load, model, est)
        chunks.append(caps)
        total += float(caps.sum())
        est = max(1024, int((target - total) / load.nu * 1.1) + 1024)
    cum = np.cumsum(np.concatenate(chunks))
    bounds = lp * np.arange(1, n_packets + 1)
    completion = np.searchsorted(cum, bounds, side="left")
    first = np.searchsorted(cum, bounds - lp, side="right")
    t = completion - first
    pmf = np.bincount(np.minimum(t, max_t - 1), minlength=max_t).astype(float)
    return pmf / pmf.sum()


def total_variation(p, q):
    """TV distance between two pmfs over a shared integer support."""
    n = max(len(p), len(q))
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return 0.5 * float(np.abs(pp - qq).sum())
