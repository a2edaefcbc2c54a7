"""Non-isothermal reactor observed through concentration c_A and temperature T.

    c_A' = -k10 exp(-E/T) c_A        y1 = c_A
    c_B' =  k10 exp(-E/T) c_A        y2 = T
    T'   = -h1 k10 exp(-E/T) c_A

``log(-y1') - log(y1) = log(k10) - E / y2`` is linear in ``(log k10, -E)``.
``y2' = h1 y1'`` gives ``h1 = y2'/y1'`` at any time with ``y1' != 0``.
c_B never reaches the outputs and is not recoverable.
"""
from __future__ import annotations

import numpy as np

from .._accel import rhs_kernel
from ..core import ParameterMap, PointwiseRatio, RegressionBlock, SystemSpec

NAME = "reactor"
THETA_DEFAULT = np.array([1.0, 2.0, 100.0])
XI_DEFAULT = np.array([1.0, 0.0, 350.0])


@rhs_kernel
def rhs(x, theta, aux):
    out = np.empty(3)
    rate = theta[0] * np.exp(-theta[2] / x[2]) * x[0]
    out[0] = -rate
    out[1] = rate
    out[2] = -theta[1] * rate
    return out


def output(x, theta):
    return np.array([x[0], x[2]])


def analytic_jet(states, theta):
    k, h1, e = theta
    ca, temp = states[:, 0], states[:, 2]
    rate = k * np.exp(-e / temp) * ca
    return np.column_stack([ca, -rate]), np.column_stack([temp, -h1 * rate])


def omega_member(x, theta) -> bool:
    return bool(x[0] > 0 and x[1] >= 0 and x[2] > 0)


def theta_member(theta) -> bool:
    return bool(np.all(np.asarray(theta) > 0))


def inverse_output_map(jet, theta):
    # c_B is invisible to the outputs: placeholder 0, masked out
    return np.array([jet.y(0), 0.0, jet.y(1)]), np.array([True, False, True])


def forward(theta):
    k, h1, e = np.asarray(theta, dtype=float)
    return np.array([np.log(k), -e, h1])


def inverse(sigma):
    s = np.asarray(sigma, dtype=float)
    return np.array([np.exp(s[0]), s[2], -s[1]])


def make_reactor() -> dict:
    spec = SystemSpec(
        state_dim=3,
        param_dim=3,
        output_dim=2,
        rhs=rhs,
        output=output,
        derivative_orders=(1, 1),
        analytic_jet=analytic_jet,
        omega_member=omega_member,
        theta_member=theta_member,
        inverse_output_map=inverse_output_map,
        state_names=("c_A", "c_B", "T"),
        param_names=("k10", "h1", "E"),
    )
    blocks = [
        RegressionBlock(
            index=0,
            target=lambda J, prior: np.log(-J.y(0, 1)) - np.log(J.y(0)),
            basis=(lambda J: 1.0, lambda J: 1.0 / J.y(1)),
            label="arrhenius",
            basis_labels=("1", "1/y2"),
        )
    ]
    ratios = [
        PointwiseRatio("h1", numerator=lambda J: J.y(1, 1), denominator=lambda J: J.y(0, 1), label="y2'/y1'"),
    ]
    pmap = ParameterMap(q=2, forward=forward, inverse=inverse, ratio_names=("h1",))
    return dict(name=NAME, spec=spec, blocks=blocks, pmap=pmap, ratios=ratios,
                description="non-isothermal reactor, c_B unobserved")
