"""Lock-in kernel: numba fused loop versus the numpy/scipy fallback.

    python3 benchmarks/bench_kernels.py [--tau 0.1] [--repeat 5]

Times one sweep point (5 tau of samples at 32 samples per 101 kHz period),
with and without noise, and checks the two backends agree.
"""

import argparse
import math
import time

import numpy as np

from esr_twin import _accel
from esr_twin.kernels import lockin_filter
from esr_twin.sweep import SAMPLES_PER_PERIOD


def _inputs(tau, f_mod=101e3, seed=0):
    fs = SAMPLES_PER_PERIOD * f_mod
    n = int(round(5 * tau * fs))
    k = np.arange(SAMPLES_PER_PERIOD)
    ph = 2 * np.pi * k / SAMPLES_PER_PERIOD
    sig = 1e-6 * np.cos(ph + 0.3)
    ref_i, ref_q = math.sqrt(2) * np.cos(ph), -math.sqrt(2) * np.sin(ph)
    noise = 1e-7 * np.random.default_rng(seed).standard_normal(n)
    alpha = -math.expm1(-1.0 / (fs * tau))
    n_tau = int(round(tau * fs))
    return sig, ref_i, ref_q, noise, n, alpha, n_tau


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=0.1, help="lock-in time constant, s")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    sig, ri, rq, noise, n, alpha, n_tau = _inputs(args.tau)
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    print(f"{n} samples per point (tau = {args.tau:g} s)")
    results = {}
    for noisy in (False, True):
        for b in backends:
            call = lambda: lockin_filter(sig, ri, rq, n, alpha, n_tau, n_tau,
                                         noise if noisy else None, backend=b)
            call()  # warm-up / JIT compile
            t, out = _best(call, args.repeat)
            results[(noisy, b)] = out
            print(f"  {'noise' if noisy else 'clean':5s}  {b:6s}  {t * 1e3:8.2f} ms  "
                  f"{n / t / 1e6:7.1f} Msamples/s")
        if len(backends) == 2:
            a, c = (np.array(results[(noisy, b)]) for b in backends)
            print(f"  max |numpy - numba| = {np.max(np.abs(a - c)):.2e} V")


if __name__ == "__main__":
    main()
