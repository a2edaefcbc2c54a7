"""Synthetic data: analytic jets on a grid, or uniformly sampled outputs."""
from __future__ import annotations

import numpy as np

from .core import JetSeries, Model
from .jets import analytic_jets
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, integrate

__all__ = ["grid", "simulate_jets", "sample_outputs"]


def grid(window, n: int) -> np.ndarray:
    """``n`` uniform times in the semi-open window ``[a, b)``."""
    a, b = window
    return np.linspace(a, b, int(n), endpoint=False)


def simulate_jets(model: Model, x0, theta, window=(0.0, 10.0), grid_n: int = 200,
                  rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> JetSeries:
    a, b = (float(v) for v in window)
    traj = integrate(model.spec, x0, theta, (0.0, b), rtol=rtol, atol=atol)
    return analytic_jets(model.spec, traj, theta, grid((a, b), grid_n))


def sample_outputs(model: Model, x0, theta, t_end: float, dt: float,
                   rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                   noise_sigma=None, seed: int | None = None):
    """Outputs ``h(x(t))`` at ``t = 0, dt, 2 dt, ...`` up to ``t_end``.

    ``noise_sigma`` (scalar or per channel) adds seeded Gaussian noise.  It
    exists for exploration only; nothing downstream accounts for it.
    """
    n = int(round(t_end / dt)) + 1
    t = np.arange(n) * dt
    traj = integrate(model.spec, x0, theta, (0.0, t[-1]), rtol=rtol, atol=atol)
    states = traj(t)
    theta = np.asarray(theta, dtype=float)
    y = np.array([model.spec.h(x, theta) for x in states])
    if noise_sigma is not None:
        sig = np.broadcast_to(np.asarray(noise_sigma, dtype=float), (y.shape[1],))
        y = y + np.random.default_rng(seed).normal(size=y.shape) * sig
    return t, y
