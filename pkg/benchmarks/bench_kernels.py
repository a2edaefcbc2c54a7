"""Compiled kernels against their pure-Python / numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

Each row times one kernel on a fixed workload with both implementations
(numba must be installed and JETID_NUMBA not disabled).  Compilation is
excluded: every compiled kernel is called once before timing.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from jetid import get_model
from jetid._accel import NUMBA_ENABLED
from jetid.jets import _apply_stencil_loop, _apply_stencil_numpy, fd_weights
from jetid.ode import _dopri_loop
from jetid.timeselect import _exhaustive_loop, _exhaustive_numpy, _greedy_rows_loop, _greedy_rows_numpy


def workloads():
    lv = get_model("lotka_volterra")
    theta = np.array([2 / 3, 4 / 3, 1.0, 1.0])
    x0 = np.array([1.0, 2.0])
    ode_args = (x0, theta, lv.spec.aux, 0.0, 100.0, 1.0, 1e-10, 1e-12, 10**7)
    rhs_py = lv.spec.rhs.py_func

    rng = np.random.default_rng(0)
    y = np.sin(np.linspace(0, 100, 1_000_000))
    w = fd_weights(1, np.arange(-2, 3))
    tall = rng.normal(size=(2000, 5))
    tall /= np.linalg.norm(tall, axis=0)
    small = rng.normal(size=(30, 3))
    small /= np.linalg.norm(small, axis=0)

    return [
        ("dopri5 LV, t in [0, 100]",
         lambda: _dopri_loop(lv.spec.rhs, *ode_args), lambda: _dopri_loop.py_func(rhs_py, *ode_args)),
        ("5-point stencil, 1e6 samples",
         lambda: _apply_stencil_loop(y, w), lambda: _apply_stencil_numpy(y, w)),
        ("greedy rows, 2000 x 5",
         lambda: _greedy_rows_loop(tall, 5), lambda: _greedy_rows_numpy(tall, 5)),
        ("exhaustive rows, C(30, 3)",
         lambda: _exhaustive_loop(small, 3), lambda: _exhaustive_numpy(small, 3)),
    ]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba is unavailable or disabled (JETID_NUMBA=0); nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':32s} {'numba [ms]':>12s} {'python [ms]':>12s} {'speedup':>8s}")
    for label, fast, slow in workloads():
        fast()  # compile
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=max(1, args.repeat // 2))) * 1e3
        print(f"{label:32s} {t_fast:12.3f} {t_slow:12.3f} {t_slow / t_fast:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
