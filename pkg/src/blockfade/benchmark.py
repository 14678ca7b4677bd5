"""Benchmark the compiled simulation kernel against the Python fallback.

Runs the same experiment through both kernels, verifies the results are
bit-identical, and reports throughput. Usage:

    python -m blockfade.benchmark [--blocks N] [--theta T]
"""

import argparse
import time

from .channel import LoadSpec
from .sim import HAVE_COMPILED, SimConfig, simulate


def _time_run(cfg, kernel):
    t0 = time.perf_counter()
    stats = simulate(cfg, kernel=kernel)
    return time.perf_counter() - t0, stats


def run_benchmark(theta=0.5, blocks=300_000, buffer_K=10, seed=42):
    cfg = SimConfig(
        load=LoadSpec.from_theta(theta),
        buffer_K=buffer_K,
        total_blocks=blocks,
        warmup_blocks=min(10_000, blocks // 10),
        seed=seed,
        replications=1,
    )
    t_py, s_py = _time_run(cfg, "python")
    print(f"python kernel  : {blocks / t_py:12.0f} blocks/s  ({t_py:.3f} s)")
    if not HAVE_COMPILED:
        print("compiled kernel: not built (pip install -e . rebuilds it)")
        return
    t_cy, s_cy = _time_run(cfg, "compiled")
    print(f"compiled kernel: {blocks / t_cy:12.0f} blocks/s  ({t_cy:.3f} s)")
    print(f"speedup        : {t_py / t_cy:12.1f}x")
    same = (
        s_py.mean_queue_at_block_start == s_cy.mean_queue_at_block_start
        and s_py.mean_delay == s_cy.mean_delay
        and s_py.dropped == s_cy.dropped
        and (s_py.queue_length_histogram == s_cy.queue_length_histogram).all()
    )
    print(f"bit-identical  : {'yes' if same else 'NO - kernels disagree'}")
    if not same:
        raise SystemExit(1)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=300_000)
    ap.add_argument("--theta", type=float, default=0.5)
    args = ap.parse_args(argv)
    run_benchmark(theta=args.theta, blocks=args.blocks)


if __name__ == "__main__":
    main()
