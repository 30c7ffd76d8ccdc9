"""Benchmark the compiled kernel backend against the pure-Python fallback.

Generates one realistic batch of simulator-shaped inputs, runs all three
kernels on both backends, checks the outputs are bit-identical, and prints
per-kernel timings with the speedup. Usage:

    python3 benchmarks/bench_kernels.py [--trajectories N] [--slate L] [--repeats K]

The compiled backend is skipped (with a note) when the extension module is
not importable, so the script also runs in fallback-only environments.
"""

import argparse
import time

import numpy as np

from dcgeval.kernels import _pure

try:
    from dcgeval.kernels import _core
except ImportError:
    _core = None


def make_inputs(n, slate, n_contexts=16, n_actions=64, seed=20240601):
    """Random but realistically shaped kernel inputs for one dataset draw."""
    rng = np.random.default_rng(seed)
    ranked = np.stack(
        [rng.choice(n_actions, size=slate, replace=False) for _ in range(n)]
    ).astype(np.int64)
    ctx_idx = rng.integers(0, n_contexts, size=n, dtype=np.int64)
    quality = rng.uniform(0.05, 0.6, size=(n_contexts, n_actions))
    pbm_probs = 0.85 ** np.arange(slate, dtype=np.float64)
    view_u = rng.random((n, slate))
    reward_vals = rng.random((n, slate))
    return ranked, ctx_idx, quality, pbm_probs, view_u, reward_vals


def time_call(fn, args, repeats):
    """Best-of-k wall time; best-of filters scheduler noise."""
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def assert_same(pure_out, core_out, name):
    pure_parts = pure_out if isinstance(pure_out, tuple) else (pure_out,)
    core_parts = core_out if isinstance(core_out, tuple) else (core_out,)
    for i, (p, c) in enumerate(zip(pure_parts, core_parts)):
        np.testing.assert_array_equal(p, c, err_msg=f"{name} output {i} differs")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trajectories", type=int, default=200_000)
    parser.add_argument("--slate", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    sample_args = make_inputs(args.trajectories, args.slate)
    counts, _, _, props, rewards = _pure.sample_logged_items(*sample_args, True)
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    labels = rewards / props
    disc = np.tile(0.85 ** np.arange(args.slate), args.trajectories)[: len(labels)]
    disc_by_pos = 0.85 ** np.arange(args.slate, dtype=np.float64)

    cases = [
        ("sample_logged_items", "sample_logged_items", (*sample_args, True)),
        ("dcg_values", "dcg_values", (offsets, labels, disc)),
        ("ideal_dcg_values", "ideal_dcg_values", (offsets, labels, disc_by_pos)),
    ]

    print(
        f"{args.trajectories} trajectories, slate {args.slate}, "
        f"{int(counts.sum())} logged items, best of {args.repeats}"
    )
    if _core is None:
        print("compiled backend not importable; timing the pure backend only")
    header = f"{'kernel':<22}{'pure':>12}{'compiled':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, attr, call_args in cases:
        t_pure, out_pure = time_call(getattr(_pure, attr), call_args, args.repeats)
        if _core is None:
            print(f"{name:<22}{t_pure * 1e3:>10.1f}ms{'-':>12}{'-':>10}")
            continue
        t_core, out_core = time_call(getattr(_core, attr), call_args, args.repeats)
        assert_same(out_pure, out_core, name)
        print(
            f"{name:<22}{t_pure * 1e3:>10.1f}ms{t_core * 1e3:>10.1f}ms"
            f"{t_pure / t_core:>9.1f}x"
        )
    if _core is not None:
        print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
