#!/usr/bin/env python3
"""Benchmark the compiled solver kernel against the pure-numpy fallback.

Solves the same programs to the same certified tolerance with both
backends and reports wall time per solve. The first numba solve is a
warm-up so JIT compilation is not counted.
"""

import time

import numpy as np

from tscontrol.controllers import build_offline_program, mrpc_slow_program
from tscontrol.instances import NOISE_CYCLE, random_norm_costs, random_system
from tscontrol.noise import generate_noise
from tscontrol.solver import resolve_backend, solve

SEED = 987

CASES = [
    ("window n=2 len=10", 2, 20, 10, True),
    ("offline n=2 T=40 k=5", 2, 40, 5, False),
    ("offline n=3 T=80 k=5", 3, 80, 5, False),
    ("offline n=4 T=120 k=10", 4, 120, 10, False),
]


def build_case(n, T, k, window):
    spec = random_system([SEED, n, T], n=n, T=T, k=k)
    costs = random_norm_costs([SEED, n, T, 1], n)
    w = generate_noise(NOISE_CYCLE[(n + T) % len(NOISE_CYCLE)], spec, [SEED, n, T, 2])
    if window:
        return mrpc_slow_program(spec, costs, w[:k], k)
    return build_offline_program(spec, costs, w)


def time_solve(prog, backend, repeats=3):
    best = np.inf
    rep = None
    for _ in range(repeats):
        start = time.perf_counter()
        rep = solve(prog, tol=1e-7, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, rep


def main():
    try:
        resolve_backend("numba")
    except Exception as exc:
        print(f"numba backend unavailable ({exc}); nothing to compare")
        return

    # warm-up: compile the kernel on a small program
    solve(build_case(2, 20, 10, True), tol=1e-7, backend="numba")

    print(f"{'case':<24} {'dim':>5} {'numba':>10} {'numpy':>10} {'speedup':>8}  iters")
    for label, n, T, k, window in CASES:
        prog = build_case(n, T, k, window)
        t_nb, rep_nb = time_solve(prog, "numba")
        t_np, rep_np = time_solve(prog, "numpy")
        if abs(rep_nb.objective - rep_np.objective) > 1e-6 * (1 + abs(rep_nb.objective)):
            raise RuntimeError(f"{label}: backends disagree beyond tolerance")
        print(
            f"{label:<24} {prog.dim:>5} {t_nb * 1e3:>9.1f}ms {t_np * 1e3:>9.1f}ms "
            f"{t_np / t_nb:>7.1f}x  {rep_nb.iterations}/{rep_np.iterations}"
        )


if __name__ == "__main__":
    main()
