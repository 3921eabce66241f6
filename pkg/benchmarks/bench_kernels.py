#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the numpy fallback.

Micro-benchmarks each elementwise kernel, then times a full inner-solver run
under both backends on an FF48-sized synthetic instance.  Run from the repo
root after building the extension:

    python benchmarks/bench_kernels.py [--size 912] [--repeats 2000]
"""

import argparse
import time

import numpy as np

from bregaccel import FistaConfig, SolverConfig, _kernels, solve, stack
from bregaccel import synth
from bregaccel._kernels import _py_kernels
from bregaccel.prox import fista_minimize

try:
    from bregaccel._kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def micro(size, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(size)
    x[rng.integers(0, size, size // 8)] = 0.0
    grad = rng.standard_normal(size)
    delta = np.abs(rng.standard_normal(size))
    cases = {
        "soft_threshold_vec": lambda k: k.soft_threshold_vec(grad, delta),
        "prox_grad_step": lambda k: k.prox_grad_step(x, grad, 0.01, delta),
        "momentum_combine": lambda k: k.momentum_combine(x, grad, 0.6),
        "diff_norm2": lambda k: k.diff_norm2(x, grad),
        "min_norm_subgrad": lambda k: k.min_norm_subgrad(grad, delta, x),
        "beta_phi": lambda k: k.beta_phi(grad, delta, x),
        "project_face": lambda k: k.project_face(grad, x),
    }
    print(f"\nelementwise kernels, n = {size} ({repeats} repeats, best of 5)")
    print(f"{'kernel':<20} {'numpy':>12} {'compiled':>12} {'speedup':>9}")
    for name, call in cases.items():
        t_py = _time(lambda: call(_py_kernels), repeats)
        if _ckernels is None:
            print(f"{name:<20} {t_py * 1e6:>10.2f}us {'-':>12} {'-':>9}")
            continue
        t_c = _time(lambda: call(_ckernels), repeats)
        print(
            f"{name:<20} {t_py * 1e6:>10.2f}us {t_c * 1e6:>10.2f}us "
            f"{t_py / t_c:>8.2f}x"
        )


def end_to_end():
    pm = synth.random_model(seed=1, n_assets=48, periods=10)
    sp = stack(pm.problem)
    # the k=1 subproblem (the k=0 one is solved exactly by the origin)
    from bregaccel.model import SubproblemState
    state = SubproblemState(s_k=sp.s.copy(), lam=1.0)
    cfg = FistaConfig(tol_f=1e-7, max_iters=3000)
    x0 = np.zeros(sp.n_x)
    print(f"\ninner solver, n_x = {sp.n_x}:")
    results = {}
    for backend in _kernels.available_backends():
        _kernels.set_backend(backend)
        t0 = time.perf_counter()
        res = fista_minimize(sp, state, x0, cfg)
        dt = time.perf_counter() - t0
        results[backend] = dt
        print(f"  {backend:<9} {dt:8.3f}s  ({res.iters} iterations)")
    if len(results) == 2:
        print(f"  speedup   {results['python'] / results['compiled']:8.2f}x")

    print(f"\nfull solve (sbsa, default config), n_x = {sp.n_x}:")
    results = {}
    for backend in _kernels.available_backends():
        _kernels.set_backend(backend)
        t0 = time.perf_counter()
        rep = solve(sp, SolverConfig(keep_trace=False))
        dt = time.perf_counter() - t0
        results[backend] = dt
        print(f"  {backend:<9} {dt:8.3f}s  ({rep.outer_iters} outer iterations,"
              f" {rep.termination})")
    if len(results) == 2:
        print(f"  speedup   {results['python'] / results['compiled']:8.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=912)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled backend not built; showing numpy timings only")
    micro(args.size, args.repeats)
    end_to_end()


if __name__ == "__main__":
    main()
