import numpy as np
import pytest

from jetid import build_model, get_model, identify
from jetid.core import JetSeries
from jetid.errors import AssumptionError, EvaluatorDomainError, LinearDependenceError, NonIdentifiableError
from jetid.models import Control, make_linparam
from jetid.models.henon_heiles import equilibria, hamiltonian
from jetid.models.linparam import row_subset
from jetid.ode import integrate
from jetid.simulate import simulate_jets
from jetid.timeselect import evaluate_basis

HH_THETA = np.array([0.5, 0.5, 0.5, 0.5, 1.0, -1 / 3])


def jets_at(*rows):
    """A single-time jet series; each row is (value, derivative) of one channel."""
    return JetSeries(np.array([0.0]), tuple(np.array([r], dtype=float) for r in rows))


# predator-prey

def test_lv_sigma_at_reference_parameters():
    np.testing.assert_allclose(get_model("lotka_volterra").pmap.forward([2 / 3, 4 / 3, 1, 1]),
                               [-1 / 3, -4 / 3, 0.75, 0.75, -1.0], rtol=1e-15)


def test_lv_omega_excludes_equilibrium_and_axes():
    spec = get_model("lotka_volterra").spec
    theta = [2 / 3, 4 / 3, 1.0, 1.0]
    assert not spec.omega_member([1.0, 0.5], theta)
    assert spec.omega_member([1.0, 0.5 + 1e-6], theta)
    assert spec.omega_member([0.5, 1.0], theta)  # the swapped point is an ordinary state
    assert not spec.omega_member([0.0, 1.0], theta)
    assert not spec.omega_member([1.0, -0.1], theta)


# reactor

def test_reactor_sigma():
    np.testing.assert_allclose(get_model("reactor").pmap.forward([1.0, 2.0, 100.0])[:2], [0.0, -100.0])


def test_reactor_basis_row():
    phi, _ = evaluate_basis(get_model("reactor").block(0), jets_at((1.0, -0.5), (500.0, -1.0)))
    np.testing.assert_allclose(phi, [[1.0, 0.002]])


def test_reactor_rising_concentration_is_domain_error():
    with pytest.raises(EvaluatorDomainError):
        evaluate_basis(get_model("reactor").block(0), jets_at((1.0, 0.3), (350.0, -1.0)))


def test_reactor_omega():
    spec = get_model("reactor").spec
    assert spec.omega_member([1.0, 0.0, 300.0], [1, 2, 100])
    assert not spec.omega_member([0.0, 0.5, 300.0], [1, 2, 100])
    assert not spec.omega_member([1.0, -0.1, 300.0], [1, 2, 100])


def test_reactor_reports_cb_unrecoverable():
    rep = identify(get_model("reactor"), simulate_jets(get_model("reactor"), [1.0, 0.4, 350.0], [1.0, 2.0, 100.0]))
    assert rep.x0_mask.tolist() == [True, False, True]
    assert np.isnan(rep.x0_hat[1])
    assert rep.ratios["h1"] == pytest.approx(2.0, rel=1e-10)


# Henon-Heiles

def test_hh_block_sigmas():
    s = get_model("henon_heiles").pmap.forward(HH_THETA)
    np.testing.assert_allclose(s[:2], [1.0, 2.0])
    np.testing.assert_allclose(s[2:4], [1.0, -1.0])


def test_hh_hamiltonian_conserved_by_field():
    spec = get_model("henon_heiles").spec
    rng = np.random.default_rng(0)
    for x in rng.uniform(-0.5, 0.5, (20, 4)):
        h = 1e-6
        grad = np.array([(hamiltonian(x + h * e, HH_THETA) - hamiltonian(x - h * e, HH_THETA))[0] / (2 * h)
                         for e in np.eye(4)])
        assert abs(grad @ spec.f(x, HH_THETA)) <= 1e-8


def test_hh_equilibria_are_fixed_points():
    spec = get_model("henon_heiles").spec
    eq = equilibria(HH_THETA)
    assert len(eq) == 4
    for x in eq:
        np.testing.assert_allclose(spec.f(x, HH_THETA), 0.0, atol=1e-12)
        assert not spec.omega_member(x, HH_THETA)


def test_hh_constant_q2_is_rejected():
    # data of the kind q2 = p2 = 0 would produce: q2 never moves
    hh = get_model("henon_heiles")
    t = np.linspace(0, 5, 100)
    q1 = 0.1 * np.cos(t)
    zero = np.zeros_like(t)
    jets = JetSeries(t, (np.column_stack([q1, -0.1 * np.sin(t)]), np.column_stack([zero, zero]),
                         np.column_stack([0.1 * np.sin(t), 0.1 * np.cos(t)]), np.column_stack([zero, zero])))
    with pytest.raises(LinearDependenceError, match="constant"):
        identify(hh, jets)


# linparam

def test_linparam_scalar_linear():
    m = build_model(**make_linparam([[0.0], [1.0]]))
    np.testing.assert_allclose(m.pmap.forward([-0.7]), [0.0, -0.7])
    rep = identify(m, simulate_jets(m, [1.0, 0.0], [-0.7], (0.0, 3.0), 100))
    assert rep.theta_hat[0] == pytest.approx(-0.7, rel=1e-8)


def test_linparam_identity_matrix():
    m = build_model(**make_linparam(np.eye(3)))
    np.testing.assert_allclose(m.pmap.forward([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_linparam_random_full_rank_round_trip():
    A = np.random.default_rng(1).normal(size=(4, 3))
    m = build_model(**make_linparam(A))
    theta = np.array([0.3, -1.2, 2.0])
    sigma = m.pmap.forward(theta)
    np.testing.assert_allclose(sigma, A @ theta)
    np.testing.assert_allclose(m.pmap.inverse(sigma), theta, rtol=1e-12)
    assert np.linalg.matrix_rank(A[row_subset(A)]) == 3


def test_linparam_rank_deficient_refused():
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0], [1.0, 3.0, 4.0]])
    with pytest.raises(NonIdentifiableError):
        make_linparam(A)


def test_linparam_degree_too_low():
    with pytest.raises(AssumptionError):
        make_linparam(np.ones((2, 3)))


def test_linparam_rational_with_control():
    bundle = make_linparam(np.eye(3), n_poly=[2.0, 0.0, 1.0], rho=[[0.5], [0.0, 1.0]],
                           control=Control("sinusoid", (0.8, 1.5, 0.2, 0.1)))
    m = build_model(**bundle)
    theta = np.array([0.4, -1.0, -0.3])
    rep = identify(m, simulate_jets(m, [0.2, 0.0], theta))
    np.testing.assert_allclose(rep.theta_hat, theta, rtol=1e-8)


@pytest.mark.parametrize("kind,params,t,expected", [
    ("none", (), 1.0, 0.0),
    ("polynomial", (1.0, 0.0, 2.0), 3.0, 19.0),
    ("sinusoid", (2.0, 1.0, 0.0, 0.5), np.pi / 2, 2.5),
    ("exponential", (1.0, -1.0, 0.0), 1.0, np.exp(-1.0)),
])
def test_control_values(kind, params, t, expected):
    assert Control(kind, params)(t) == pytest.approx(expected)


def test_linparam_kernel_matches_analytic_derivative():
    bundle = make_linparam(np.eye(3), n_poly=[2.0, 0.0, 1.0], rho=[[0.5], [0.0, 1.0]],
                           control=Control("polynomial", (0.1, -0.2, 0.05)))
    spec = bundle["spec"]
    theta = np.array([0.4, -1.0, -0.3])
    for x, t in [(0.3, 0.0), (-0.8, 1.7), (1.1, 4.0)]:
        jet = spec.jet([x, t], theta)
        assert spec.f([x, t], theta)[0] == pytest.approx(jet.y(0, 1), rel=1e-13)
        assert spec.f([x, t], theta)[1] == 1.0
    traj = integrate(spec, [0.3, 0.0], theta, (0.0, 2.0))
    assert traj.final_state[1] == pytest.approx(2.0, rel=1e-12)
