"""Adaptive Dormand-Prince 5(4) integration with dense output.

The stepping loop is a numba kernel when the system's ``rhs`` is itself a
compiled kernel (it is passed in as a first-class function), and runs as
plain Python otherwise.  Backward integration
runs the same loop on the time-reversed field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import NUMBA_AVAILABLE, RHS_TYPE, is_compiled, kernel
from .core import SystemSpec
from .errors import IntegrationError, OmegaExitError, StepUnderflowError

__all__ = ["Trajectory", "integrate", "integrate_backward", "DEFAULT_RTOL", "DEFAULT_ATOL"]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension (Shampine): x(t0 + s*h) = x0 + h * K^T P [s, s^2, s^3, s^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

if NUMBA_AVAILABLE:
    from numba import types as _nt

    _f8 = _nt.float64
    _LOOP_SIGNATURE = _nt.Tuple((_f8[::1], _f8[:, ::1], _f8[:, :, ::1], _nt.int64))(
        RHS_TYPE, _f8[::1], _f8[::1], _f8[::1], _f8, _f8, _f8, _f8, _f8, _nt.int64
    )
else:  # pragma: no cover
    _LOOP_SIGNATURE = None


@kernel
def _rms(v, x, y, rtol, atol):
    s = 0.0
    n = v.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(x[i]), abs(y[i]))
        s += (v[i] / sc) ** 2
    return np.sqrt(s / n)


@kernel(signature=_LOOP_SIGNATURE)
def _dopri_loop(rhs, x0, theta, aux, t0, t1, sign, rtol, atol, max_steps):
    n = x0.shape[0]
    cap = 256
    ts = np.empty(cap)
    xs = np.empty((cap, n))
    ks = np.empty((cap, 7, n))
    ts[0] = t0
    xs[0] = x0
    span = t1 - t0
    status = 0

    x = x0.copy()
    f0 = sign * rhs(x, theta, aux)
    # initial step (Hairer, Norsett & Wanner II.4)
    d0 = _rms(x, x, x, rtol, atol)
    d1 = _rms(f0, x, x, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span)
    x1 = x + h0 * f0
    f1 = sign * rhs(x1, theta, aux)
    d2 = _rms(f1 - f0, x, x, rtol, atol) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100 * h0, h1, span)

    t = t0
    k = np.empty((7, n))
    k[0] = f0
    xt = np.empty(n)
    xnew = np.empty(n)
    errv = np.empty(n)
    count = 1
    steps = 0
    while t < t1:
        if steps >= max_steps:
            status = 2
            break
        steps += 1
        hmin = 16.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h < hmin:
            status = 1
            break
        if t + h > t1 or t1 - (t + h) < hmin:
            h = t1 - t
        for s in range(1, 7):
            for i in range(n):
                acc = x[i]
                for j in range(s):
                    acc += h * _A[s, j] * k[j, i]
                xt[i] = acc
            if s == 6:
                for i in range(n):
                    xnew[i] = xt[i]
            k[s] = sign * rhs(xt, theta, aux)
        for i in range(n):
            e = 0.0
            for j in range(7):
                e += _E[j] * k[j, i]
            errv[i] = h * e
        err = _rms(errv, x, xnew, rtol, atol)
        if not np.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            t_new = t + h if h != t1 - t else t1
            if count >= cap:
                cap *= 2
                ts2 = np.empty(cap)
                xs2 = np.empty((cap, n))
                ks2 = np.empty((cap, 7, n))
                ts2[:count] = ts[:count]
                xs2[:count] = xs[:count]
                ks2[: count - 1] = ks[: count - 1]
                ts, xs, ks = ts2, xs2, ks2
            ks[count - 1] = k
            ts[count] = t_new
            xs[count] = xnew
            count += 1
            t = t_new
            for i in range(n):
                x[i] = xnew[i]
            k[0] = k[6]
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, 0.9 * err ** -0.2)
            h *= fac
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    return ts[:count].copy(), xs[:count].copy(), ks[: max(count - 1, 0)].copy(), status


@kernel
def _dense_eval(ts, xs, ks, tq):
    m = tq.shape[0]
    n = xs.shape[1]
    out = np.empty((m, n))
    last = ts.shape[0] - 1
    for q in range(m):
        i = np.searchsorted(ts, tq[q], side="right") - 1
        if i >= last:
            i = last - 1
        if i < 0:
            i = 0
        h = ts[i + 1] - ts[i]
        s = (tq[q] - ts[i]) / h
        s2 = s * s
        s3 = s2 * s
        s4 = s3 * s
        for c in range(n):
            acc = 0.0
            for j in range(7):
                acc += ks[i, j, c] * (_P[j, 0] * s + _P[j, 1] * s2 + _P[j, 2] * s3 + _P[j, 3] * s4)
            out[q, c] = xs[i, c] + h * acc
    return out


@dataclass(frozen=True)
class Trajectory:
    """Accepted steps of an integration plus the stage data for interpolation."""

    times: np.ndarray
    states: np.ndarray
    stages: np.ndarray
    rtol: float
    atol: float

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def __call__(self, t) -> np.ndarray:
        """Dense output at time(s) ``t`` (4th order interpolant)."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = self.t_span
        span = b - a
        if np.any(tq < a - 1e-12 * max(1.0, span)) or np.any(tq > b + 1e-12 * max(1.0, span)):
            raise IntegrationError("interpolation time outside the trajectory span", span=[a, b])
        if len(self.times) == 1:
            out = np.repeat(self.states[:1], len(tq), axis=0)
        else:
            out = _dense_eval(self.times, self.states, self.stages, np.clip(tq, a, b))
        return out[0] if np.ndim(t) == 0 else out


def _run(spec: SystemSpec, x0, theta, t0: float, t1: float, sign: float, rtol: float, atol: float, max_steps: int):
    x0 = np.ascontiguousarray(x0, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    loop = _dopri_loop if is_compiled(spec.rhs) else _dopri_loop.py_func
    return loop(spec.rhs, x0, theta, spec.aux, float(t0), float(t1), float(sign), float(rtol), float(atol), int(max_steps))


def _check_omega(spec: SystemSpec, times, states, theta):
    for t, x in zip(times, states):
        if not np.all(np.isfinite(x)) or not spec.omega_member(x, theta):
            raise OmegaExitError(f"trajectory left the admissible set at t={t:.6g}", exit_time=float(t))


def integrate(
    spec: SystemSpec,
    xi,
    theta,
    t_span,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 1_000_000,
    check_omega: bool = True,
) -> Trajectory:
    """Integrate ``x' = f(x, theta)`` from ``xi`` over ``t_span``."""
    t0, t1 = (float(v) for v in t_span)
    if not t0 < t1:
        raise ValueError("t_span must satisfy t0 < t1")
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if xi.shape != (spec.state_dim,):
        raise ValueError(f"initial state must have shape ({spec.state_dim},)")
    if check_omega and not spec.theta_member(theta):
        raise ValueError("parameters outside the admissible set")
    ts, xs, ks, status = _run(spec, xi, theta, t0, t1, 1.0, rtol, atol, max_steps)
    if check_omega:
        _check_omega(spec, ts, xs, theta)
    if status != STATUS_OK:
        raise StepUnderflowError(
            "step size underflow" if status == STATUS_UNDERFLOW else "maximum step count reached",
            t_reached=float(ts[-1]),
        )
    return Trajectory(ts, xs, ks, rtol, atol)


def integrate_backward(
    spec: SystemSpec,
    state_at,
    theta,
    t_target: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    max_steps: int = 1_000_000,
    check_omega: bool = True,
) -> np.ndarray:
    """State at ``t_target`` of the solution through ``state_at = (t, x)``.

    Integrates the time-reversed field ``-f`` forward over ``t - t_target``.
    """
    t_tilde, x = state_at
    t_tilde = float(t_tilde)
    x = np.asarray(x, dtype=float)
    if t_target > t_tilde:
        raise ValueError("t_target must not exceed the time of the given state")
    if t_target == t_tilde:
        return x.copy()
    ss, xs, _, status = _run(spec, x, theta, 0.0, t_tilde - t_target, -1.0, rtol, atol, max_steps)
    if check_omega:
        for s, xv in zip(ss, xs):
            if not np.all(np.isfinite(xv)) or not spec.omega_member(xv, np.asarray(theta, dtype=float)):
                t_exit = t_tilde - s
                raise OmegaExitError(f"backward trajectory left the admissible set at t={t_exit:.6g}", exit_time=float(t_exit))
    if status != STATUS_OK:
        raise StepUnderflowError("step size underflow in backward integration", t_reached=float(t_tilde - ss[-1]))
    return xs[-1].copy()
