import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from jetid import get_model
from jetid._accel import NUMBA_ENABLED, kernel
from jetid.core import SystemSpec
from jetid.errors import OmegaExitError
from jetid.models.henon_heiles import hamiltonian
from jetid.ode import _dopri_loop, integrate, integrate_backward


@kernel
def _zero(x, theta, aux):
    return np.zeros(x.shape[0])


@kernel
def _unit_drift(x, theta, aux):
    out = np.empty(1)
    out[0] = 1.0
    return out


@kernel
def _decay(x, theta, aux):
    out = np.empty(1)
    out[0] = -theta[0] * x[0]
    return out


ZERO = SystemSpec(2, 1, 1, _zero, lambda x, th: x[:1], (0,))
DECAY = SystemSpec(1, 1, 1, _decay, lambda x, th: x, (0,))


def lv_invariant(x, theta):
    a, b, g, d = theta
    x1, x2 = np.atleast_2d(x).T
    return g * x1 - d * np.log(x1) + b * x2 - a * np.log(x2)


def test_zero_field_is_constant():
    traj = integrate(ZERO, [1.5, -2.0], [0.0], (0.0, 3.0))
    np.testing.assert_array_equal(traj.final_state, [1.5, -2.0])
    np.testing.assert_array_equal(traj(1.234), [1.5, -2.0])


def test_exponential_decay_matches_closed_form():
    traj = integrate(DECAY, [2.0], [0.7], (0.0, 5.0))
    t = np.linspace(0, 5, 37)
    np.testing.assert_allclose(traj(t)[:, 0], 2.0 * np.exp(-0.7 * t), rtol=1e-8)


def test_lv_first_integral_conserved():
    lv = get_model("lotka_volterra")
    theta = [2 / 3, 4 / 3, 1.0, 1.0]
    traj = integrate(lv.spec, [1.0, 2.0], theta, (0.0, 10.0))
    v = lv_invariant(traj(np.linspace(0, 10, 400)), theta)
    assert np.max(np.abs(v - v[0])) <= 1e-8


def test_reactor_concentration_decreases():
    r = get_model("reactor")
    traj = integrate(r.spec, [1.0, 0.0, 350.0], [1.0, 2.0, 100.0], (0.0, 10.0))
    ca = traj(np.linspace(0, 10, 200))[:, 0]
    assert np.all(np.diff(ca) < 0) and np.all(ca > 0)
    x = traj(np.linspace(0, 10, 200))
    np.testing.assert_allclose(x[:, 0] + x[:, 1], 1.0, rtol=1e-10)


def test_hh_energy_conserved():
    hh = get_model("henon_heiles")
    theta = np.array([0.5, 0.5, 0.5, 0.5, 1.0, -1 / 3])
    traj = integrate(hh.spec, [0.1, -0.1, 0.2, 0.1], theta, (0.0, 10.0))
    energy = hamiltonian(traj(np.linspace(0, 10, 300)), theta)
    assert np.max(np.abs(energy - energy[0])) <= 1e-9


@pytest.mark.parametrize("name,x0,theta", [
    ("lotka_volterra", [1.0, 2.0], [2 / 3, 4 / 3, 1.0, 1.0]),
    ("henon_heiles", [0.1, -0.1, 0.2, 0.1], [0.5, 0.5, 0.5, 0.5, 1.0, -1 / 3]),
    ("reactor", [1.0, 0.0, 350.0], [1.0, 2.0, 100.0]),
])
def test_agrees_with_scipy_dop853(name, x0, theta):
    spec = get_model(name).spec
    t = np.linspace(0, 10, 50)
    ref = solve_ivp(lambda _t, x: spec.f(x, theta), (0, 10), x0, method="DOP853", rtol=1e-13, atol=1e-14, t_eval=t)
    ours = integrate(spec, x0, theta, (0.0, 10.0))(t)
    np.testing.assert_allclose(ours, ref.y.T, rtol=1e-7, atol=1e-9)


def test_backward_at_same_time_is_identity():
    lv = get_model("lotka_volterra")
    x = np.array([1.3, 0.7])
    np.testing.assert_array_equal(integrate_backward(lv.spec, (2.0, x), [2 / 3, 4 / 3, 1, 1], 2.0), x)


def test_omega_exit_reports_time():
    spec = SystemSpec(1, 1, 1, _unit_drift, lambda x, th: x, (0,), omega_member=lambda x, th: x[0] < 1.0)
    with pytest.raises(OmegaExitError) as info:
        integrate(spec, [0.0], [0.0], (0.0, 3.0))
    assert 1.0 <= info.value.context["exit_time"] <= 3.0


def test_backward_omega_exit():
    spec = SystemSpec(1, 1, 1, _unit_drift, lambda x, th: x, (0,), omega_member=lambda x, th: x[0] > 0.0)
    with pytest.raises(OmegaExitError) as info:
        integrate_backward(spec, (2.0, [1.0]), [0.0], 0.0)
    assert 0.0 <= info.value.context["exit_time"] <= 1.0


def test_tolerance_tightening_reduces_error():
    """Error against the closed form does not grow when tolerances shrink by decades."""
    errs = []
    for tol in (1e-4, 1e-6, 1e-8, 1e-10):
        x = integrate(DECAY, [1.0], [1.3], (0.0, 4.0), rtol=tol, atol=tol * 1e-2).final_state[0]
        errs.append(abs(x - np.exp(-5.2)))
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-10


@settings(max_examples=100, deadline=None)
@given(
    x1=st.floats(0.3, 3.0), x2=st.floats(0.3, 3.0),
    t1=st.floats(0.05, 1.0),
)
def test_forward_backward_round_trip(x1, x2, t1):
    lv = get_model("lotka_volterra")
    theta = np.array([2 / 3, 4 / 3, 1.0, 1.0])
    xi = np.array([x1, x2])
    if np.linalg.norm(xi - [1.0, 0.5]) < 1e-6:
        return
    tol = 1e-10
    end = integrate(lv.spec, xi, theta, (0.0, t1), rtol=tol, atol=tol * 1e-2).final_state
    back = integrate_backward(lv.spec, (t1, end), theta, 0.0, rtol=tol, atol=tol * 1e-2)
    assert np.linalg.norm(back - xi) <= 10 * tol * np.linalg.norm(xi)


def test_compiled_and_python_loops_agree():
    lv = get_model("lotka_volterra")
    args = (np.array([1.0, 2.0]), np.array([2 / 3, 4 / 3, 1.0, 1.0]), lv.spec.aux, 0.0, 5.0, 1.0, 1e-10, 1e-12, 100000)
    rhs_py = getattr(lv.spec.rhs, "py_func", lv.spec.rhs)
    ts_p, xs_p, _, st_p = _dopri_loop.py_func(rhs_py, *args)
    ts_c, xs_c, _, st_c = _dopri_loop(lv.spec.rhs, *args) if NUMBA_ENABLED else (ts_p, xs_p, None, st_p)
    assert st_p == st_c == 0
    np.testing.assert_allclose(ts_c, ts_p, rtol=1e-12)
    np.testing.assert_allclose(xs_c, xs_p, rtol=1e-11)


def test_plain_python_field_is_accepted():
    spec = SystemSpec(1, 1, 1, lambda x, th, aux: -th[0] * x, lambda x, th: x, (0,))
    traj = integrate(spec, [1.0], [2.0], (0.0, 1.0))
    assert traj.final_state[0] == pytest.approx(np.exp(-2.0), rel=1e-9)
