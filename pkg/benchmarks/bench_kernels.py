"""Compare the compiled kernel core against the pure-numpy fallback.

Two workloads, mirroring the production hot paths:
  rk4_run         single-trajectory stepping (calibration, forward passes)
  two_time_sweep  batched delay-time propagation (tomography inner loop)

Run:  python benchmarks/bench_kernels.py [--fwhm 10]
"""
import argparse
import time

import numpy as np

from qdcascade import _kernels_py
from qdcascade.model import QdParams, PulseSpec, envelope, liouvillian_split

try:
    from qdcascade import _core
except ImportError:
    _core = None


def _workload(fwhm):
    p = QdParams(fss=1.5)
    pulse = PulseSpec(fwhm=fwhm, area=18.0, alpha_h=1.0)
    l0, l1 = liouvillian_split(p, pulse.alpha_h)
    dt = 0.02
    n = int(6 * fwhm / dt)
    t_half = np.arange(2 * n + 1) * (dt / 2.0)
    om = envelope(pulse, t_half)
    y0 = np.zeros(16, dtype=complex)
    y0[0] = 1.0
    step_mats = _kernels_py.rk4_step_matrices(l0, l1, om, dt)
    seeds = np.zeros((3, 16), dtype=complex)
    seeds[0, 5] = seeds[1, 10] = seeds[2, 6] = 1.0
    nodes = np.arange(n + 1)
    chi0 = np.tile(seeds, (nodes.size, 1))
    start = np.repeat(nodes, 3).astype(np.int64)
    stop = np.full(start.size, n, dtype=np.int64)
    comp = np.array([5, 6, 9, 10], dtype=np.int64)
    return (np.ascontiguousarray(l0), np.ascontiguousarray(l1), om, dt, y0,
            np.ascontiguousarray(step_mats), chi0, start, stop, comp)


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fwhm", type=float, default=10.0)
    args = ap.parse_args()
    l0, l1, om, dt, y0, step_mats, chi0, start, stop, comp = _workload(args.fwhm)
    n = step_mats.shape[0]
    print(f"workload: fwhm={args.fwhm} ps, {n} steps, {chi0.shape[0]} batch elements")

    impls = [("python", _kernels_py)]
    if _core is not None:
        impls.append(("compiled", _core))
    else:
        print("compiled core not available; showing fallback only")

    results = {}
    for name, mod in impls:
        t_run = _time(lambda m=mod: m.rk4_run(l0, l1, om, dt, y0))
        t_sweep = _time(lambda m=mod: m.two_time_sweep(step_mats, chi0, start, stop, comp, dt),
                        repeats=2)
        results[name] = (t_run, t_sweep)
        print(f"{name:>9}: rk4_run {t_run*1e3:8.1f} ms   two_time_sweep {t_sweep*1e3:8.1f} ms")
    if len(results) == 2:
        sp_run = results["python"][0] / results["compiled"][0]
        sp_sweep = results["python"][1] / results["compiled"][1]
        print(f"{'speedup':>9}: rk4_run {sp_run:8.2f}x   two_time_sweep {sp_sweep:8.2f}x")
        a1, c1 = _kernels_py.two_time_sweep(step_mats, chi0, start, stop, comp, dt)
        a2, c2 = _core.two_time_sweep(step_mats, chi0, start, stop, comp, dt)
        print(f"agreement: max|acc diff| = {np.max(np.abs(a1 - a2)):.3e}, "
              f"max|chi diff| = {np.max(np.abs(c1 - c2)):.3e}")


if __name__ == "__main__":
    main()
