"""Backend benchmark for the tracker hot paths.

Runs the bundled crossing workload (8x8 grid, horizon 16) through each
available kernel backend and reports per-trial wall time. The joint filter
is the N^3-per-epoch hot path the compiled backend exists for; the chain
filters are N^2 and mostly measure dispatch overhead.

Usage: python3 benchmarks/bench_filters.py [--trials 300] [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import time
from importlib import resources

import numpy as np

import hrctrack as ht


def build_workload(trials: int) -> tuple:
    raw = resources.files("hrctrack").joinpath("configs/filter_crossing_single.json")
    cfg = ht.config_from_dict(json.loads(raw.read_text()))
    bundle = ht.build_models(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 424242]))
    tables = []
    for _ in range(trials):
        path = ht.sample_rc_path(rng, bundle.endpoint, bundle.family)
        pts = ht.generate_single_sequence(rng, path, bundle.obs_model, bundle.grid)
        tables.append(ht.likelihood_table(pts, bundle.obs_model, bundle.grid))
    return bundle, tables


def time_batch(fn, tables: list, repeat: int) -> float:
    """Best-of-`repeat` seconds per trial."""
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        for table in tables:
            fn(table)
        best = min(best, (time.perf_counter() - started) / len(tables))
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=300)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    bundle, tables = build_workload(args.trials)
    initial = bundle.initial_marginal
    sb = bundle.schrodinger
    passes = {
        "hrc_filter": lambda table: ht.hrc_filter(bundle.endpoint, bundle.family, table),
        "hmc_filter": lambda table: ht.hmc_filter(
            initial, bundle.base, table, horizon=bundle.horizon
        ),
        "hsc_filter": lambda table: ht.hsc_filter(sb, initial, table),
    }

    backends = ht.available_backends()
    print(f"workload: {args.trials} trials, horizon {bundle.horizon}, "
          f"{bundle.grid.n_states} states; best of {args.repeat} batches")
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        with ht.use(backend):
            for fn in passes.values():  # warm-up / JIT compile
                fn(tables[0])
            results[backend] = {
                name: time_batch(fn, tables, args.repeat)
                for name, fn in passes.items()
            }
    for name in passes:
        line = f"{name:11s}"
        for backend in backends:
            line += f"  {backend}: {1e3 * results[backend][name]:7.3f} ms/trial"
        if "numba" in results and "numpy" in results:
            ratio = results["numpy"][name] / results["numba"][name]
            line += f"  speedup x{ratio:.2f}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
