"""Henon-Heiles system with unknown Hamiltonian coefficients.

    H = a1 q1^2 + a2 q2^2 + a3 p1^2 + a4 p2^2 + a5 q1^2 q2 + a6 q2^3
    p' = dH/dq,  q' = -dH/dp,  y = (q1, q2, p1, p2)

a3 and a4 are read pointwise from ``y1' = -2 a3 y3`` and ``y2' = -2 a4 y4``.
The remaining four come in two stages: ``y3' = 2a1 y1 + 2a5 y1 y2`` first,
then ``y4' - a5 y1^2 = 2a2 y2 + 3a6 y2^2`` with ``a5`` taken from stage one,
so only ``{y2, y2^2}`` needs to be independent.
"""
from __future__ import annotations

import numpy as np

from .._accel import rhs_kernel
from ..core import ParameterMap, PointwiseRatio, RegressionBlock, SystemSpec
from ..errors import LinearDependenceError

NAME = "henon_heiles"
THETA_DEFAULT = np.array([0.5, 0.5, 0.5, 0.5, 1.0, -1 / 3])
XI_DEFAULT = np.array([0.1, -0.1, 0.2, 0.1])
EQUILIBRIUM_RADIUS = 1e-9
VARIANCE_FLOOR = 1e-12


@rhs_kernel
def rhs(x, theta, aux):
    a1, a2, a3, a4, a5, a6 = theta[0], theta[1], theta[2], theta[3], theta[4], theta[5]
    q1, q2, p1, p2 = x[0], x[1], x[2], x[3]
    out = np.empty(4)
    out[0] = -2.0 * a3 * p1
    out[1] = -2.0 * a4 * p2
    out[2] = 2.0 * a1 * q1 + 2.0 * a5 * q1 * q2
    out[3] = 2.0 * a2 * q2 + a5 * q1 * q1 + 3.0 * a6 * q2 * q2
    return out


def hamiltonian(states, theta):
    a1, a2, a3, a4, a5, a6 = theta
    s = np.atleast_2d(states)
    q1, q2, p1, p2 = s.T
    return a1 * q1**2 + a2 * q2**2 + a3 * p1**2 + a4 * p2**2 + a5 * q1**2 * q2 + a6 * q2**3


def output(x, theta):
    return np.array(x, dtype=float)


def analytic_jet(states, theta):
    a1, a2, a3, a4, a5, a6 = theta
    q1, q2, p1, p2 = states.T
    d = (
        -2 * a3 * p1,
        -2 * a4 * p2,
        2 * a1 * q1 + 2 * a5 * q1 * q2,
        2 * a2 * q2 + a5 * q1**2 + 3 * a6 * q2**2,
    )
    return tuple(np.column_stack([v, dv]) for v, dv in zip((q1, q2, p1, p2), d))


def equilibria(theta) -> np.ndarray:
    """All equilibria ``(q1, q2, 0, 0)`` (up to four)."""
    a1, a2, _, _, a5, a6 = theta
    pts = [(0.0, 0.0), (0.0, -2 * a2 / (3 * a6))]
    q2 = -a1 / a5
    q1sq = -(2 * a2 * q2 + 3 * a6 * q2**2) / a5
    if q1sq >= 0:
        r = np.sqrt(q1sq)
        pts += [(r, q2), (-r, q2)]
    return np.array([[a, b, 0.0, 0.0] for a, b in pts])


def omega_member(x, theta) -> bool:
    d = np.linalg.norm(equilibria(theta) - np.asarray(x), axis=1)
    return bool(np.all(d > EQUILIBRIUM_RADIUS))


def theta_member(theta) -> bool:
    return bool(np.all(np.asarray(theta) != 0))


def inverse_output_map(jet, theta):
    return np.array([jet.y(i) for i in range(4)]), np.ones(4, dtype=bool)


def forward(theta):
    a1, a2, a3, a4, a5, a6 = np.asarray(theta, dtype=float)
    return np.array([2 * a1, 2 * a5, 2 * a2, 3 * a6, a3, a4])


def inverse(sigma):
    s = np.asarray(sigma, dtype=float)
    return np.array([s[0] / 2, s[2] / 2, s[4], s[5], s[1] / 2, s[3] / 3])


def check_data(jets):
    """Solutions with constant q2 are excluded; detect them on the data."""
    if np.var(jets.y(1)) <= VARIANCE_FLOOR:
        raise LinearDependenceError("y2 is constant on the window; {y2, y2^2} are dependent", block="potential_q2")


def make_henon_heiles() -> dict:
    spec = SystemSpec(
        state_dim=4,
        param_dim=6,
        output_dim=4,
        rhs=rhs,
        output=output,
        derivative_orders=(1, 1, 1, 1),
        analytic_jet=analytic_jet,
        omega_member=omega_member,
        theta_member=theta_member,
        inverse_output_map=inverse_output_map,
        state_names=("q1", "q2", "p1", "p2"),
        param_names=("a1", "a2", "a3", "a4", "a5", "a6"),
    )
    blocks = [
        RegressionBlock(
            index=0,
            target=lambda J, prior: J.y(2, 1),
            basis=(lambda J: J.y(0), lambda J: J.y(0) * J.y(1)),
            label="force_q1",
            basis_labels=("y1", "y1*y2"),
        ),
        RegressionBlock(
            index=1,
            target=lambda J, prior: J.y(3, 1) - 0.5 * prior[0][1] * J.y(0) ** 2,
            basis=(lambda J: J.y(1), lambda J: J.y(1) ** 2),
            depends_on=((0, 1),),
            label="potential_q2",
            basis_labels=("y2", "y2^2"),
        ),
    ]
    ratios = [
        PointwiseRatio("a3", numerator=lambda J: -0.5 * J.y(0, 1), denominator=lambda J: J.y(2), label="-y1'/(2 y3)"),
        PointwiseRatio("a4", numerator=lambda J: -0.5 * J.y(1, 1), denominator=lambda J: J.y(3), label="-y2'/(2 y4)"),
    ]
    pmap = ParameterMap(q=4, forward=forward, inverse=inverse, ratio_names=("a3", "a4"))
    return dict(name=NAME, spec=spec, blocks=blocks, pmap=pmap, ratios=ratios, data_check=check_data,
                description="Henon-Heiles with staged recovery of the potential")
