#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the numpy fallback.

Times the hot kernels at campaign-realistic sizes, then one end-to-end
batch proposal under the currently selected backend.  Run twice to see
the full end-to-end difference:

    python3 benchmarks/benchmark_kernels.py
    VANTAGE_PURE_PYTHON=1 python3 benchmarks/benchmark_kernels.py
"""

import time

import numpy as np

import vantage._kernels as dispatch
import vantage._kernels_py as py_backend

try:
    import vantage._native as native_backend
except ImportError:
    native_backend = None


def timeit(fn, *args, repeat=30):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_backends():
    rng = np.random.default_rng(0)
    train = rng.random((40, 2))
    flat = rng.random((1024, 2))
    stack = rng.random((128, 8, 2))
    covs = py_backend.batch_cov(stack, 0.2, 0.2, 0.04)
    means = rng.random((128, 8))
    normals = rng.standard_normal((128, 8))
    lattice = rng.random((40401, 2))
    tests = rng.random((100, 2))
    centers = np.array([[0.27, 0.62], [0.72, 0.38]])
    heights = np.array([0.38, 0.55])
    widths = np.array([0.16, 0.13])

    cases = [
        ("cross_cov 40x1024", lambda b: b.cross_cov(train, flat, 0.2, 0.2, 0.04)),
        ("batch_cov 128x8", lambda b: b.batch_cov(stack, 0.2, 0.2, 0.04)),
        ("psd_factor 128x8x8", lambda b: b.psd_factor_stack(covs)),
        ("qucb_scores 128 batches", lambda b: b.qucb_scores(means, covs, normals, 2.0)),
        ("landscape 201x201 grid", lambda b: b.landscape_objective(lattice, tests, centers, heights, widths, 0.15, 0.35)),
    ]

    backends = [("python", py_backend)]
    if native_backend is not None:
        backends.append(("native", native_backend))

    header = f"{'kernel':<26}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, call in cases:
        times = [timeit(call, backend) for _, backend in backends]
        line = f"{label:<26}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


def bench_proposal():
    from vantage import AcquisitionConfig, KernelParams, NormalizedPoint, Observation, fit, propose_batch

    rng = np.random.default_rng(1)
    obs = [Observation(NormalizedPoint(*rng.random(2)), float(rng.random())) for _ in range(40)]
    gp = fit(obs, KernelParams())
    cfg = AcquisitionConfig()
    start = time.perf_counter()
    repeats = 3
    for i in range(repeats):
        propose_batch(gp, cfg, seed=i)
    elapsed = (time.perf_counter() - start) / repeats
    print(f"\npropose_batch q=8, 40 obs, backend={dispatch.BACKEND}: {elapsed * 1e3:.0f} ms")


if __name__ == "__main__":
    print(f"selected backend: {dispatch.BACKEND}")
    bench_backends()
    bench_proposal()
