"""Output jets: closed form along a simulated trajectory, or finite
differences of uniformly sampled data."""
from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, kernel
from .core import JetSeries, SystemSpec
from .errors import JetError
from .ode import Trajectory

__all__ = ["analytic_jets", "numeric_jets", "fd_weights", "DEFAULT_STENCIL"]

DEFAULT_STENCIL = 5


def analytic_jets(spec: SystemSpec, traj: Trajectory, theta, grid) -> JetSeries:
    """Jets at ``grid`` from interpolated states and the model's Lie derivatives."""
    if spec.analytic_jet is None:
        raise JetError("system has no analytic jet evaluator")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    a, b = traj.t_span
    slack = 1e-12 * max(1.0, b - a)
    if grid.size == 0 or grid.min() < a - slack or grid.max() > b + slack:
        raise JetError("grid outside the trajectory span", span=[a, b])
    states = np.atleast_2d(traj(grid))
    vals = spec.analytic_jet(states, np.asarray(theta, dtype=float))
    return JetSeries(grid, tuple(vals))


def fd_weights(order: int, offsets) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0.

    Fornberg's recursion on the (unit-spaced) stencil ``offsets``.
    """
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    if order >= n:
        raise ValueError("stencil too narrow for the requested derivative")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@kernel
def _apply_stencil_loop(y, w):
    n = y.shape[0] - w.shape[0] + 1
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(w.shape[0]):
            acc += w[j] * y[i + j]
        out[i] = acc
    return out


def _apply_stencil_numpy(y, w):
    return np.lib.stride_tricks.sliding_window_view(y, len(w)) @ w


apply_stencil = _apply_stencil_loop if NUMBA_ENABLED else _apply_stencil_numpy


def numeric_jets(t, y, orders, stencil: int = DEFAULT_STENCIL) -> JetSeries:
    """Central-difference jets from samples ``y`` (shape ``(N, m)``) at times ``t``.

    Only interior points are returned: ``stencil // 2`` samples are trimmed at
    each end.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != t.shape[0]:
        raise JetError("sample times and values differ in length")
    orders = tuple(int(d) for d in orders)
    if len(orders) != y.shape[1]:
        raise JetError("one derivative order per channel is required")
    if stencil % 2 != 1 or stencil < 2 * max(orders, default=0) + 1 or stencil < 3:
        raise JetError(f"stencil width {stencil} must be odd and at least 2*max(order)+1")
    if len(t) < stencil:
        raise JetError(f"too few samples ({len(t)}) for a {stencil}-point stencil", samples=len(t))
    dts = np.diff(t)
    if np.any(dts <= 0):
        raise JetError("sample times must be strictly increasing")
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(dts - dt)) > 1e-9 * dt:
        bad = int(np.argmax(np.abs(dts - dt)))
        raise JetError("non-uniform sample spacing", row=bad + 1)
    if not np.all(np.isfinite(y)):
        raise JetError("non-finite sample values")

    half = stencil // 2
    offsets = np.arange(-half, half + 1)
    interior = slice(half, len(t) - half)
    values = []
    for ch, d in enumerate(orders):
        col = np.ascontiguousarray(y[:, ch])
        cols = [col[interior]]
        for k in range(1, d + 1):
            w = fd_weights(k, offsets) / dt**k
            cols.append(apply_stencil(col, w))
        values.append(np.column_stack(cols))
    return JetSeries(t[interior], tuple(values))
