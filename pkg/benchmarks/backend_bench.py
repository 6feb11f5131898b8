#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy fallback.

Runs each hot kernel on a representative workload with both backends
and prints a timing table plus the speedup. Usage:

    python benchmarks/backend_bench.py [--repeats N]
"""

import argparse
import time

import numpy as np

from simbayes.backends import pure
from simbayes.mdn import MdnArchitecture, TrainConfig, init_network, train
from simbayes.models import (RandomWalkBreakConfig, generate_ensemble,
                             preprocess_ensemble)
from simbayes.params import ParameterVector
from simbayes.rng import rng_from, standard_normal
from simbayes.windows import build_windows

try:
    from simbayes.backends import _native as native
except ImportError:
    native = None


def timeit(fn, repeats, inner=1):
    """Best per-call time over ``repeats`` rounds of ``inner`` calls."""
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def kernel_cases():
    # grow the heap the way real pipelines do (window datasets are
    # megabytes); freshly started processes otherwise serve the per-call
    # temporaries via mmap/munmap, which dominates the small kernels
    scratch = [np.empty(500_000) for _ in range(4)]
    del scratch

    gen = rng_from(1)
    eps = 0.04 * standard_normal(gen, 1050)
    g = np.array([0.0, -0.7, 0.5, 1.01])
    b = np.array([0.0, -0.4, 0.3, 0.0])

    noise = standard_normal(gen, (1051, 2))
    fw_args = (False, 0.01, 1.0, 0.12, 1.5, -0.327, 1.79, 18.43, 0.0, 0.0,
               0.0, 0.758 * noise[:, 0], 2.087 * noise[:, 1], 1e12)

    arch = MdnArchitecture(3, (32, 32, 32), 16, 1)
    params = init_network(arch, 0)
    x = standard_normal(gen, (512, 3))
    y = standard_normal(gen, (512, 1))
    net_args = (params.hidden_w, params.hidden_b, params.head_w,
                params.head_b, params.components)

    sample = np.sort(standard_normal(gen, 49950))
    queries = np.linspace(-4, 4, 999)

    return [
        ("bh_path (T=1050)",
         lambda m: m.bh_path(np.zeros(3), g, b, 10.0, 0.01, eps, 1e12), 10),
        ("fw_path (T=1050)", lambda m: m.fw_path(*fw_args), 10),
        ("mdn_loss_and_grads (512x3)",
         lambda m: m.mdn_loss_and_grads(*net_args, x, y, 1e-8), 30),
        ("mdn_forward (512x3)", lambda m: m.mdn_forward(*net_args, x), 30),
        ("kde_log_density (m=49950, q=999)",
         lambda m: m.kde_log_density(sample, 0.1, queries), 1),
    ]


def train_case():
    theta = ParameterVector(("d1", "d2"), [0.4, 0.5], [[0, 1], [0, 1]])
    fixed = RandomWalkBreakConfig(sigma1=1.0, sigma2=2.0, tau=700)
    ens = preprocess_ensemble(
        "random_walk_break",
        generate_ensemble("random_walk_break", theta, fixed, 50, 1000, 9000))
    ds = build_windows(ens, 3)
    arch = MdnArchitecture(3, (32, 32, 32), 16, 1)
    return ds, arch


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if native is None:
        print("compiled backend not built; showing pure backend only")

    rows = []
    for name, fn, inner in kernel_cases():
        t_pure = timeit(lambda: fn(pure), args.repeats, inner)
        if native is not None:
            t_native = timeit(lambda: fn(native), args.repeats, inner)
            rows.append((name, t_native, t_pure, t_pure / t_native))
        else:
            rows.append((name, float("nan"), t_pure, float("nan")))

    # end-to-end training (backend chosen by SIMBAYES_BACKEND at import,
    # so time it under whatever backend is active)
    ds, arch = train_case()
    t_train = timeit(lambda: train(ds, arch, TrainConfig(seed=5)), 2)

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'native':>10}  {'pure':>10}  {'speedup':>8}")
    for name, t_n, t_p, ratio in rows:
        print(f"{name:<{width}}  {t_n * 1e3:>8.2f}ms  {t_p * 1e3:>8.2f}ms  "
              f"{ratio:>7.1f}x")
    from simbayes.backends import backend_name
    print(f"\nfull MDN training (M=49850, 12 epochs) on the active "
          f"'{backend_name()}' backend: {t_train:.2f}s")


if __name__ == "__main__":
    main()
