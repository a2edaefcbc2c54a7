"""Scalar linearly parameterized rational systems.

    x' = (theta^T phi(x) + sum_i rho_i(x) u(t)^i) / n(x),    y = x

with polynomial ``phi_j(x) = sum_i A[i, j] x^i``.  Rearranged,

    n(y) y' - sum_i rho_i(y) u^i = sum_i (A theta)_i y^i,

a single relation with basis ``{1, y, ..., y^s}`` and ``sigma = A theta``.
Time is carried as a second state with ``t' = 1`` so the control can be
evaluated along the solution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .._accel import kernel, rhs_kernel
from ..core import ParameterMap, RegressionBlock, SystemSpec
from ..errors import AssumptionError, NonIdentifiableError

NAME = "linparam"
RANK_TOL = 1e-10

U_NONE, U_POLY, U_SIN, U_EXP = 0, 1, 2, 3
_U_KINDS = {"none": U_NONE, "polynomial": U_POLY, "sinusoid": U_SIN, "exponential": U_EXP}


@dataclass(frozen=True)
class Control:
    """Closed-form control signal.

    ``polynomial``: ``sum_k c_k t^k`` with ``params = (c_0, c_1, ...)``;
    ``sinusoid``: ``offset + amp * sin(omega t + phase)``, ``params = (amp, omega, phase, offset)``;
    ``exponential``: ``offset + amp * exp(rate t)``, ``params = (amp, rate, offset)``.
    """

    kind: str = "none"
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _U_KINDS:
            raise ValueError(f"unknown control kind {self.kind!r}; expected one of {sorted(_U_KINDS)}")
        need = {"sinusoid": 4, "exponential": 3}.get(self.kind)
        if need is not None and len(self.params) != need:
            raise ValueError(f"{self.kind} control takes {need} parameters")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def __call__(self, t):
        return _u_value(_pack_control(self), 0, np.asarray(t, dtype=float))


def _pack_control(u: Control) -> np.ndarray:
    return np.array([_U_KINDS[u.kind], len(u.params), *u.params], dtype=float)


def _u_value(aux, pos, t):
    # numpy twin of the kernel's control evaluation; vectorized over t
    kind = int(aux[pos])
    npar = int(aux[pos + 1])
    p = aux[pos + 2 : pos + 2 + npar]
    if kind == U_POLY:
        return np.polynomial.polynomial.polyval(t, p) if npar else np.zeros_like(t)
    if kind == U_SIN:
        return p[3] + p[0] * np.sin(p[1] * t + p[2])
    if kind == U_EXP:
        return p[2] + p[0] * np.exp(p[1] * t)
    return np.zeros_like(t)


@kernel
def _poly(aux, start, length, x):
    acc = 0.0
    for k in range(length - 1, -1, -1):
        acc = acc * x + aux[start + k]
    return acc


@kernel
def _control(aux, pos, t):
    kind = int(aux[pos])
    npar = int(aux[pos + 1])
    p = pos + 2
    if kind == 1:
        return _poly(aux, p, npar, t)
    if kind == 2:
        return aux[p + 3] + aux[p] * np.sin(aux[p + 1] * t + aux[p + 2])
    if kind == 3:
        return aux[p + 2] + aux[p] * np.exp(aux[p + 1] * t)
    return 0.0


@rhs_kernel
def rhs(x, theta, aux):
    # aux: [s+1, b, A (row-major), len(n), n..., n_rho, (len, coeffs...)*, control...]
    s1 = int(aux[0])
    b = int(aux[1])
    xv = x[0]
    drift = 0.0
    xp = 1.0
    for i in range(s1):
        row = 0.0
        for j in range(b):
            row += aux[2 + i * b + j] * theta[j]
        drift += row * xp
        xp *= xv
    pos = 2 + s1 * b
    ln = int(aux[pos])
    nval = _poly(aux, pos + 1, ln, xv)
    pos += 1 + ln
    nrho = int(aux[pos])
    pos += 1
    rho_start = pos
    for i in range(nrho):
        pos += 1 + int(aux[pos])
    u = _control(aux, pos, x[1])
    pos = rho_start
    up = 1.0
    for i in range(nrho):
        lr = int(aux[pos])
        drift += _poly(aux, pos + 1, lr, xv) * up
        up *= u
        pos += 1 + lr
    out = np.empty(2)
    out[0] = drift / nval
    out[1] = 1.0
    return out


def _as_poly(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return c if c.size else np.zeros(1)


def pack_aux(A, n_poly, rho, control: Control) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    parts = [[A.shape[0], A.shape[1]], A.ravel(), [len(n_poly)], n_poly, [len(rho)]]
    for r in rho:
        parts += [[len(r)], r]
    parts.append(_pack_control(control))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def row_subset(A) -> np.ndarray:
    """Rows of ``A`` forming a nonsingular ``b x b`` block (column-pivoted QR of ``A^T``)."""
    A = np.asarray(A, dtype=float)
    _, _, piv = scipy.linalg.qr(A.T, pivoting=True, mode="economic")
    return np.sort(piv[: A.shape[1]])


def make_linparam(A, n_poly=(1.0,), rho=(), control: Control | None = None, name: str = NAME) -> dict:
    """Bundle for a user-supplied linearly parameterized system.

    ``A`` is ``(s+1) x b`` with ``A[i, j]`` the coefficient of ``x^i`` in
    ``phi_j``; ``n_poly`` and each entry of ``rho`` are ascending coefficient
    lists.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    s1, b = A.shape
    if s1 - 1 < b - 1:
        raise AssumptionError(f"highest degree s={s1 - 1} is below b-1={b - 1}", s=s1 - 1, b=b)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * max(sv[0], 1e-300))) if sv[0] > 0 else 0
    if rank < b:
        raise NonIdentifiableError(
            f"coefficient matrix has rank {rank} < {b}: parameters are not identifiable", rank=rank, b=b
        )
    n_poly = _as_poly(n_poly)
    rho = [_as_poly(r) for r in rho]
    control = control or Control()
    aux = pack_aux(A, n_poly, rho, control)
    rows = row_subset(A)
    A_sub = A[rows]
    P = np.polynomial.polynomial

    def n_of(y):
        return P.polyval(y, n_poly)

    def forcing(y, t):
        u = control(t)
        return sum((P.polyval(y, r) * u**i for i, r in enumerate(rho)), np.zeros_like(np.asarray(y, dtype=float)))

    def output(x, theta):
        return np.array([x[0]])

    def analytic_jet(states, theta):
        x, t = states[:, 0], states[:, 1]
        dx = (P.polyval(x, A @ theta) + forcing(x, t)) / n_of(x)
        return (np.column_stack([x, dx]),)

    def omega_member(x, theta):
        return bool(n_of(x[0]) > 0)

    def inverse_output_map(jet, theta):
        return np.array([jet.y(0), jet.t]), np.array([True, True])

    def forward(theta):
        return A @ np.asarray(theta, dtype=float)

    def inverse(sigma):
        return np.linalg.solve(A_sub, np.asarray(sigma, dtype=float)[rows])

    spec = SystemSpec(
        state_dim=2,
        param_dim=b,
        output_dim=1,
        rhs=rhs,
        output=output,
        derivative_orders=(1,),
        analytic_jet=analytic_jet,
        omega_member=omega_member,
        inverse_output_map=inverse_output_map,
        aux=aux,
        state_names=("x", "t"),
        param_names=tuple(f"theta{j + 1}" for j in range(b)),
    )

    def target(J, prior):
        y = J.y(0)
        return n_of(y) * J.y(0, 1) - forcing(y, J.t)

    basis = tuple((lambda J, i=i: J.y(0) ** i) for i in range(s1))
    blocks = [RegressionBlock(0, target, basis, label="polynomial", basis_labels=tuple(f"y^{i}" for i in range(s1)))]
    pmap = ParameterMap(q=s1, forward=forward, inverse=inverse)
    return dict(name=name, spec=spec, blocks=blocks, pmap=pmap,
                description="linearly parameterized rational system (time carried as a state)",
                extra={"A": A, "rows": rows, "n": n_poly, "rho": rho, "control": control})
