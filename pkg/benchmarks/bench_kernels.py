#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy reference.

Times the three hot operations on shapes matching the default preset
(32-feature inputs, one 32-unit hidden layer, 3 classes) and reports the
per-call cost, speedup, and the worst numerical deviation between the two
backends. ``--end-to-end`` additionally times a short federated run under
each backend in a subprocess (backend choice is fixed at import time).
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from fedal.kernels import get_backend, n_weights

SHAPES = [
    ("train step, batch 1", (32, 32, 3), 1),
    ("train step, batch 32", (32, 32, 3), 32),
    ("pool scoring, batch 256", (32, 32, 3), 256),
]

END_TO_END_SNIPPET = """
import time
from fedal.config import config_from_dict
from fedal.harness import build_dataset, build_settings, Arm
from fedal.federation import run_experiment
import fedal.kernels

cfg = config_from_dict({"schedule": {"total_rounds": 10, "local_epochs": 2,
                                     "al_interval": 2, "al_last_round": 8}})
ds = build_dataset(cfg, 0)
arm = Arm("ensemble_entropy@g0.5", "fedal", "ensemble_entropy", 0.5)
t0 = time.perf_counter()
run_experiment(ds, build_settings(cfg, arm), 0)
print(f"{fedal.kernels.BACKEND}: {time.perf_counter() - t0:.2f}s")
"""


def time_call(fn, *args, repeat=2000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat * 1e6  # microseconds


def bench_kernels(repeat):
    ref = get_backend("python")
    try:
        fast = get_backend("compiled")
    except ImportError:
        print("compiled kernels not built; showing NumPy reference only")
        fast = None

    rng = np.random.default_rng(0)
    print(f"{'operation':<34} {'numpy':>10} {'compiled':>10} {'speedup':>8} {'max |diff|':>11}")
    for label, dims, batch in SHAPES:
        w = rng.normal(scale=0.3, size=n_weights(dims))
        x = rng.normal(size=(batch, dims[0]))
        y = rng.integers(0, dims[-1], batch)
        m = np.zeros_like(w)
        v = np.zeros_like(w)
        cases = [
            (f"forward        {label}", lambda b: b.forward_probs(dims, w, x)),
            (f"loss+grad      {label}", lambda b: b.loss_and_grad(dims, w, x, y)),
        ]
        if batch == 1:
            grad = ref.loss_and_grad(dims, w, x, y)[1]
            cases.append((f"adam step      {label}",
                          lambda b: b.adam_step(w, grad, m, v, 1, 2e-4, 0.9,
                                                0.999, 1e-8, 5e-4)))
        for name, call in cases:
            t_ref = time_call(lambda: call(ref), repeat=repeat)
            if fast is None:
                print(f"{name:<34} {t_ref:>8.1f}us {'-':>10} {'-':>8} {'-':>11}")
                continue
            t_fast = time_call(lambda: call(fast), repeat=repeat)
            out_ref = call(ref)
            out_fast = call(fast)
            if isinstance(out_ref, tuple):
                diff = max(np.max(np.abs(np.asarray(a) - np.asarray(b)))
                           for a, b in zip(out_ref, out_fast))
            else:
                diff = float(np.max(np.abs(out_ref - out_fast)))
            print(f"{name:<34} {t_ref:>8.1f}us {t_fast:>8.1f}us "
                  f"{t_ref / t_fast:>7.1f}x {diff:>11.2e}")


def bench_end_to_end():
    print("\nend-to-end (10-round run, per backend):")
    for backend in ("python", "compiled"):
        env = dict(os.environ, FEDAL_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", END_TO_END_SNIPPET],
                              env=env, capture_output=True, text=True)
        if proc.returncode:
            print(f"{backend}: failed ({proc.stderr.strip().splitlines()[-1]})")
        else:
            print(proc.stdout.strip())


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000,
                        help="calls per timing loop")
    parser.add_argument("--end-to-end", action="store_true",
                        help="also time a short federated run per backend")
    args = parser.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end()
