"""Compare the compiled and pure-Python root-finding kernels.

Two measurements per backend:

* micro: repeated multiplier solves on random rational functions of the
  size met in practice (4 to 8 terms);
* end to end: ``run_mtmse`` on the three-user 4x4 scenario, for both
  precoder-update rules.

Usage::

    python3 benchmarks/bench_kernels.py [--quick]
"""
import argparse
import logging
import time

import numpy as np

from mimo_secrecy import kernels
from mimo_secrecy.model import SystemConfig, sample_channels
from mimo_secrecy.mtmse import MTMSEOptions, run_mtmse


def _micro(n_calls, rng):
    w = rng.uniform(0.1, 2.0, size=(n_calls, 6))
    s = rng.uniform(0.1, 3.0, size=(n_calls, 6))
    lam = rng.uniform(0.1, 2.0, size=(n_calls, 4))
    a = rng.uniform(0.1, 2.0, size=(n_calls, 4))
    t0 = time.perf_counter()
    for i in range(n_calls):
        kernels.secular_root(w[i], s[i], 0.5, 1e-12, 1e-13)
        hi = (1.0 / lam[i].max()) * (1 - 1e-9)
        kernels.rational_root(a[i], lam[i], 0.0, a[i].sum() + 1.0, 0.0, hi, 1e-12)
    return (time.perf_counter() - t0) / n_calls


def _end_to_end(n_runs, method):
    cfg = SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, snr_db=25.0, epsilon=1.5)
    t0 = time.perf_counter()
    for i in range(n_runs):
        ch = sample_channels(cfg, i)
        run_mtmse(cfg, ch, MTMSEOptions(max_iters=20, seed=i, method=method))
    return (time.perf_counter() - t0) / n_runs


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--quick", action="store_true", help="small sample sizes")
    args = ap.parse_args()
    logging.disable(logging.WARNING)
    n_calls, n_runs = (200, 2) if args.quick else (5000, 20)
    results = {}
    for name in kernels.available_backends():
        kernels.use_backend(name)
        rng = np.random.default_rng(0)
        results[name] = (_micro(n_calls, rng), _end_to_end(n_runs, "literal"),
                         _end_to_end(n_runs, "restricted"))
    print(f"{'backend':<10} {'root pair (us)':>15} {'literal (ms)':>12} {'restricted (ms)':>16}")
    for name, (micro, e2e, e2r) in results.items():
        print(f"{name:<10} {micro * 1e6:15.1f} {e2e * 1e3:12.1f} {e2r * 1e3:16.1f}")
    if len(results) == 2:
        c, p = results["compiled"], results["python"]
        print(f"{'speed-up':<10} {p[0] / c[0]:14.1f}x {p[1] / c[1]:11.2f}x {p[2] / c[2]:15.2f}x")


if __name__ == "__main__":
    main()
