"""Command-line front end.

Subcommands compute the closed-form metrics (analyze), run the
Monte-Carlo simulator (simulate), cross-check the two (compare), emit
figure-ready sweep datasets as CSV (sweep), dump the Markov oracle
matrices (matrix), and time the two simulation kernels (benchmark).

Exit codes: 0 success, 2 validation error, 3 numeric-convergence
failure, 4 comparison flag raised under --fail-on-flag.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import finite, infinite, markov
from .channel import ChannelParams, LoadSpec, ServiceModel, derive_load
from .sim import (
    ArrivalKind,
    ArrivalSpec,
    SimConfig,
    compare as sim_compare,
    simulate as sim_run,
)
from .special import ConvergenceError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_FLAGGED = 4

THETA_GRID_DEFAULT = tuple(round(0.05 * i, 2) for i in range(1, 20))
THETA_CURVES = (0.2, 0.5, 0.8)


class SweepVariable(Enum):
    THETA = "theta"
    BUFFER = "K"


@dataclass(frozen=True)
class SweepSpec:
    """A sweep dataset description: the swept variable, its grid, fixed
    parameters, and the metric columns to emit."""

    variable: SweepVariable
    grid: tuple
    outputs: tuple
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.grid:
            raise ValueError("sweep grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if self.variable is SweepVariable.THETA:
            if not all(0 < t < 1 for t in self.grid):
                raise ValueError("theta grid must lie in (0, 1)")
        else:
            if not all(k == int(k) and k >= 1 for k in self.grid):
                raise ValueError("buffer grid must be integers >= 1")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, (ServiceModel, ArrivalKind)):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj)}")


def _flatten(payload, prefix=""):
    rows = []
    if dataclasses.is_dataclass(payload):
        payload = dataclasses.asdict(payload)
    if isinstance(payload, dict):
        for key in sorted(payload):
            rows.extend(_flatten(payload[key], f"{prefix}{key}."))
    elif isinstance(payload, (list, tuple, np.ndarray)):
        for i, v in enumerate(payload):
            rows.extend(_flatten(v, f"{prefix}{i}."))
    else:
        if isinstance(payload, (ServiceModel, ArrivalKind)):
            payload = payload.value
        rows.append((prefix[:-1], payload))
    return rows


def _emit(payload, out, fmt="json"):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["key", "value"])
        w.writerows(_flatten(payload))
        text = buf.getvalue().rstrip("\n")
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_from_args(args):
    """Resolve a LoadSpec from --theta or from the physical parameter set."""
    if args.theta is not None:
        return LoadSpec.from_theta(args.theta, rho=args.rho)
    physical = ("bandwidth", "block_length", "power_dbw", "noise_density",
                "distance", "alpha", "sigma2", "rate")
    missing = [f"--{p.replace('_', '-')}" for p in physical
               if getattr(args, p) is None]
    if missing:
        raise ValueError(
            "provide --theta, or the full physical set (missing: "
            + ", ".join(missing) + "); note the load depends on the noise "
            "density only through theta")
    params = ChannelParams(
        bandwidth_W=args.bandwidth,
        block_length_TB=args.block_length,
        tx_power_P=10.0 ** (args.power_dbw / 10.0),  # dBW -> W at the boundary
        noise_density_N0=args.noise_density,
        distance_d=args.distance,
        pathloss_alpha=args.alpha,
        rayleigh_sigma2=args.sigma2,
    )
    return derive_load(params, args.rate)


def _add_load_args(p):
    p.add_argument("--theta", type=float, default=None,
                   help="traffic load = rate / low-SNR ergodic capacity; "
                        "canonical parameter, overrides the physical set")
    p.add_argument("--rho", type=float, default=1e-3,
                   help="average received SNR (used by the exact-capacity model)")
    p.add_argument("--rate", type=float, default=None, help="data rate, nats/s")
    p.add_argument("--bandwidth", type=float, default=None, help="bandwidth W, Hz")
    p.add_argument("--block-length", type=float, default=None, help="block length, s")
    p.add_argument("--power-dbw", type=float, default=None, help="transmit power, dBW")
    p.add_argument("--noise-density", type=float, default=None,
                   help="noise power spectral density N0, W/Hz")
    p.add_argument("--distance", type=float, default=None, help="link distance, m")
    p.add_argument("--alpha", type=float, default=None, help="path-loss exponent")
    p.add_argument("--sigma2", type=float, default=None,
                   help="Rayleigh component variance")


def _add_sim_args(p):
    p.add_argument("--buffer", type=int, default=None,
                   help="buffer size K in packets (omit for infinite)")
    p.add_argument("--arrivals", choices=["constant", "poisson"], default="constant")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="Poisson arrival rate, packets per block")
    p.add_argument("--blocks", type=int, default=1_000_000)
    p.add_argument("--warmup", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--service-model", choices=["lowsnr", "exact"], default="lowsnr")
    p.add_argument("--kernel", choices=["auto", "compiled", "python"], default="auto")


def _sim_config(args):
    load = _load_from_args(args)
    arrival = (ArrivalSpec(ArrivalKind.POISSON, args.lam)
               if args.arrivals == "poisson" else ArrivalSpec())
    model = (ServiceModel.EXACT_LOG_CAPACITY if args.service_model == "exact"
             else ServiceModel.LOW_SNR_EXPONENTIAL)
    return SimConfig(
        load=load,
        service_model=model,
        buffer_K=args.buffer,
        arrival=arrival,
        total_blocks=args.blocks,
        warmup_blocks=args.warmup,
        seed=args.seed,
        replications=args.replications,
    )


def cmd_analyze(args):
    load = _load_from_args(args)
    theta = load.theta
    delay = infinite.mean_delay(theta)
    busy = infinite.busy_idle_stats(theta)
    pmf = infinite.stationary_pmf(theta, max_k=args.max_k)
    payload = {
        "schema": "blockfade.analyze/1",
        "theta": theta,
        "nu_nats_per_block": load.nu,
        "rho": load.rho,
        "infinite": {
            "mean_queue_length": infinite.mean_queue_length(theta),
            "std_queue_length": math.sqrt(infinite.variance_queue_length(theta)),
            "variance_queue_length": infinite.variance_queue_length(theta),
            "stationary_pmf": pmf.probabilities,
            "stationary_tail_mass": pmf.tail_mass,
            "mean_busy": busy.mean_busy,
            "mean_idle": busy.mean_idle,
            "packets_per_busy": busy.packets_per_busy,
            "mean_service": delay.mean_service,
            "mean_wait": delay.mean_wait,
            "mean_vestige": delay.mean_vestige,
            "mean_delay": delay.mean_total,
        },
    }
    if args.buffer is not None:
        K = args.buffer
        payload["finite"] = {
            "buffer_K": K,
            "overflow_probability": finite.overflow_probability(theta, K),
            "virtual_overflow_probability": infinite.virtual_overflow(theta, K),
        }
        if K >= 1:
            # the stationary law and delay hold for K >= 1; K = 0 is only a
            # formula extension of the overflow probability
            fdist = finite.finite_stationary(theta, K)
            fdelay = finite.finite_mean_delay(theta, K)
            payload["finite"].update({
                "stationary_pmf": fdist.probabilities,
                "eta": fdist.eta,
                "mean_queue_length": finite.finite_mean_queue(theta, K),
                "mean_delay": fdelay.mean_total,
            })
    _emit(payload, args.out, args.format)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _sim_config(args)
    trace_rows = [] if args.trace else None
    stats = sim_run(cfg, kernel=args.kernel, trace=trace_rows)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["block", "backlog_nats", "queue_packets",
                        "admitted", "dropped", "departures"])
            w.writerows(trace_rows)
    payload = dataclasses.asdict(stats)
    payload["schema"] = "blockfade.simulate/1"
    _emit(payload, args.out, args.format)
    return EXIT_OK


def cmd_compare(args):
    cfg = _sim_config(args)
    report = sim_compare(cfg, kernel=args.kernel)
    print(report.to_text())
    if args.out:
        _emit(report.to_dict(), args.out)
    if report.any_flagged and args.fail_on_flag:
        return EXIT_FLAGGED
    return EXIT_OK


def figure_sweep_spec(fig, buffer_K=None):
    """Preset sweep description for each figure dataset."""
    if fig in (5, 6, 7):
        outputs = {
            5: ("mean_queue", "std_queue"),
            6: ("mean_busy", "mean_idle", "packets_per_busy"),
            7: ("mean_delay", "mean_service", "mean_wait", "mean_vestige"),
        }[fig]
        return SweepSpec(SweepVariable.THETA, THETA_GRID_DEFAULT, outputs)
    if fig == 8:
        return SweepSpec(SweepVariable.THETA, THETA_CURVES, ("stationary_pmf",),
                         fixed={"max_k": 30})
    if fig == 9:
        K = 10 if buffer_K is None else buffer_K
        return SweepSpec(SweepVariable.THETA, THETA_CURVES, ("stationary_pmf",),
                         fixed={"buffer_K": K})
    if fig == 10:
        return SweepSpec(SweepVariable.BUFFER, tuple(range(1, 31)),
                         ("p_overflow", "log10_p"), fixed={"thetas": THETA_CURVES})
    raise ValueError(f"unknown figure {fig}")


def _theta_metrics(theta):
    busy = infinite.busy_idle_stats(theta)
    delay = infinite.mean_delay(theta)
    return {
        "mean_queue": infinite.mean_queue_length(theta),
        "std_queue": math.sqrt(infinite.variance_queue_length(theta)),
        "mean_busy": busy.mean_busy,
        "mean_idle": busy.mean_idle,
        "packets_per_busy": busy.packets_per_busy,
        "mean_delay": delay.mean_total,
        "mean_service": delay.mean_service,
        "mean_wait": delay.mean_wait,
        "mean_vestige": delay.mean_vestige,
    }


def _sweep_rows(fig, buffer_K):
    spec = figure_sweep_spec(fig, buffer_K)
    if fig in (5, 6, 7):
        header = ["theta", *spec.outputs]
        rows = [[t] + [_theta_metrics(t)[m] for m in spec.outputs]
                for t in spec.grid]
        title = {
            5: "queue length mean and standard deviation vs load",
            6: "average busy and idle periods vs load",
            7: "average packet delay and its components vs load",
        }[fig]
    elif fig == 8:
        header = ["k"] + [f"pi_theta_{t:g}" for t in spec.grid]
        dists = [infinite.stationary_pmf(t, max_k=spec.fixed["max_k"])
                 for t in spec.grid]
        rows = [[k] + [d.probabilities[k] for d in dists]
                for k in range(spec.fixed["max_k"] + 1)]
        title = "infinite-buffer stationary queue length distribution"
    elif fig == 9:
        K = spec.fixed["buffer_K"]
        header = ["j"] + [f"pi_theta_{t:g}" for t in spec.grid]
        dists = [finite.finite_stationary(t, K) for t in spec.grid]
        rows = [[j] + [d.probabilities[j] for d in dists] for j in range(K + 1)]
        title = f"finite-buffer stationary queue length distribution, K={K}"
    else:
        thetas = spec.fixed["thetas"]
        header = (["K"] + [f"p_overflow_theta_{t:g}" for t in thetas]
                  + [f"log10_p_theta_{t:g}" for t in thetas])
        rows = []
        for K in spec.grid:
            ps = [finite.overflow_probability(t, K) for t in thetas]
            rows.append([K] + ps + [math.log10(p) for p in ps])
        title = "overflow probability vs buffer size"
    return title, header, rows


def cmd_sweep(args):
    title, header, rows = _sweep_rows(args.fig, args.buffer)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out.write(f"# fig{args.fig}: {title}\n")
        w = csv.writer(out)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_matrix(args):
    load = _load_from_args(args)
    theta = load.theta
    if args.buffer is not None:
        m = markov.build_finite(theta, args.buffer)
    elif args.arrivals == "poisson":
        m = markov.build_poisson_arrivals(theta, args.lam, args.size)
    else:
        m = markov.build_infinite_truncated(theta, args.size)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        for row in m.rows:
            w.writerow([f"{v:.17g}" for v in row])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_benchmark(args):
    from .benchmark import run_benchmark
    run_benchmark(theta=args.theta if args.theta is not None else 0.5,
                  blocks=args.blocks)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="blockfade",
        description="Queueing metrics and simulation for buffer-aided "
                    "low-SNR block Rayleigh fading links")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="closed-form metric bundle as JSON")
    _add_load_args(pa)
    pa.add_argument("--buffer", type=int, default=None)
    pa.add_argument("--max-k", type=int, default=30,
                    help="entries of the stationary pmf to report")
    pa.add_argument("--format", choices=["json", "csv"], default="json")
    pa.add_argument("--out", default=None)
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="Monte-Carlo run, JSON stats")
    _add_load_args(ps)
    _add_sim_args(ps)
    ps.add_argument("--trace", default=None,
                    help="write a per-block CSV trace (uses the reference kernel)")
    ps.add_argument("--format", choices=["json", "csv"], default="json")
    ps.add_argument("--out", default=None)
    ps.set_defaults(func=cmd_simulate)

    pc = sub.add_parser("compare", help="simulate and cross-check closed forms")
    _add_load_args(pc)
    _add_sim_args(pc)
    pc.add_argument("--fail-on-flag", action="store_true",
                    help="exit with code 4 if any |z| > 3")
    pc.add_argument("--out", default=None, help="also write the report as JSON")
    pc.set_defaults(func=cmd_compare)

    pw = sub.add_parser("sweep", help="figure-ready CSV datasets")
    pw.add_argument("--fig", type=int, choices=[5, 6, 7, 8, 9, 10], required=True)
    pw.add_argument("--buffer", type=int, default=None,
                    help="buffer size for the finite-buffer figure (default 10)")
    pw.add_argument("--out", default=None)
    pw.set_defaults(func=cmd_sweep)

    pm = sub.add_parser("matrix", help="dump a transition matrix as CSV")
    _add_load_args(pm)
    pm.add_argument("--buffer", type=int, default=None,
                    help="finite-buffer matrix of this size")
    pm.add_argument("--size", type=int, default=50,
                    help="truncation size for infinite/Poisson chains")
    pm.add_argument("--arrivals", choices=["constant", "poisson"], default="constant")
    pm.add_argument("--lambda", dest="lam", type=float, default=1.0)
    pm.add_argument("--out", default=None)
    pm.set_defaults(func=cmd_matrix)

    pb = sub.add_parser("benchmark", help="time the compiled vs python kernels")
    pb.add_argument("--theta", type=float, default=0.5)
    pb.add_argument("--blocks", type=int, default=300_000)
    pb.set_defaults(func=cmd_benchmark)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"numeric convergence failure: {exc}", file=sys.stderr)
        code = EXIT_CONVERGENCE
    return code


if __name__ == "__main__":
    sys.exit(main())
