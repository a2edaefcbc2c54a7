"""Predator-prey model observed through predation and predator death.

    x1' = alpha x1 - beta x1 x2        y1 = beta x1 x2
    x2' = gamma x1 x2 - delta x2       y2 = delta x2

Differentiating the outputs once gives two relations linear in
``r(theta) = (alpha - delta, -beta/delta, gamma delta/beta, gamma delta/beta, -delta)``:

    y1' = (alpha - delta) y1 - (beta/delta) y1 y2 + (gamma delta/beta) y1^2/y2
    y2' = (gamma delta/beta) y1 - delta y2
"""
from __future__ import annotations

import numpy as np

from .._accel import rhs_kernel
from ..core import ParameterMap, RegressionBlock, SystemSpec

NAME = "lotka_volterra"
THETA_DEFAULT = np.array([2 / 3, 4 / 3, 1.0, 1.0])
XI_DEFAULT = np.array([1.0, 2.0])
EQUILIBRIUM_RADIUS = 1e-9


@rhs_kernel
def rhs(x, theta, aux):
    out = np.empty(2)
    out[0] = theta[0] * x[0] - theta[1] * x[0] * x[1]
    out[1] = theta[2] * x[0] * x[1] - theta[3] * x[1]
    return out


def output(x, theta):
    return np.array([theta[1] * x[0] * x[1], theta[3] * x[1]])


def analytic_jet(states, theta):
    a, b, g, d = theta
    x1, x2 = states[:, 0], states[:, 1]
    dx1 = a * x1 - b * x1 * x2
    dx2 = g * x1 * x2 - d * x2
    y1 = np.column_stack([b * x1 * x2, b * (dx1 * x2 + x1 * dx2)])
    y2 = np.column_stack([d * x2, d * dx2])
    return y1, y2


def equilibrium(theta):
    a, b, g, d = theta
    return np.array([d / g, a / b])


def omega_member(x, theta) -> bool:
    if not (x[0] > 0 and x[1] > 0):
        return False
    return bool(np.linalg.norm(np.asarray(x) - equilibrium(theta)) > EQUILIBRIUM_RADIUS)


def theta_member(theta) -> bool:
    return bool(np.all(np.asarray(theta) > 0))


def inverse_output_map(jet, theta):
    _, b, _, d = theta
    y1, y2 = jet.y(0), jet.y(1)
    x2 = y2 / d
    x1 = d * y1 / (b * y2)
    return np.array([x1, x2]), np.array([True, True])


def forward(theta):
    a, b, g, d = np.asarray(theta, dtype=float)
    return np.array([a - d, -b / d, g * d / b, g * d / b, -d])


def inverse(sigma):
    s = np.asarray(sigma, dtype=float)
    d = -s[4]
    a = s[0] + d
    b = -d * s[1]
    g = b * s[2] / d
    return np.array([a, b, g, d])


def make_lotka_volterra() -> dict:
    spec = SystemSpec(
        state_dim=2,
        param_dim=4,
        output_dim=2,
        rhs=rhs,
        output=output,
        derivative_orders=(1, 1),
        analytic_jet=analytic_jet,
        omega_member=omega_member,
        theta_member=theta_member,
        inverse_output_map=inverse_output_map,
        state_names=("x1", "x2"),
        param_names=("alpha", "beta", "gamma", "delta"),
    )
    blocks = [
        RegressionBlock(
            index=0,
            target=lambda J, prior: J.y(0, 1),
            basis=(
                lambda J: J.y(0),
                lambda J: J.y(0) * J.y(1),
                lambda J: J.y(0) ** 2 / J.y(1),
            ),
            label="prey_predation",
            basis_labels=("y1", "y1*y2", "y1^2/y2"),
        ),
        RegressionBlock(
            index=1,
            target=lambda J, prior: J.y(1, 1),
            basis=(lambda J: J.y(0), lambda J: J.y(1)),
            label="predator_death",
            basis_labels=("y1", "y2"),
        ),
    ]
    pmap = ParameterMap(q=5, forward=forward, inverse=inverse, redundancy_pairs=((2, 3),))
    return dict(name=NAME, spec=spec, blocks=blocks, pmap=pmap,
                description="Lotka-Volterra with observed predation and predator death")
