import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import MODEL_NAMES
from jetid import get_model
from jetid.core import JetSeries
from jetid.errors import EvaluatorDomainError, LinearDependenceError
from jetid.models import DEFAULTS
from jetid.simulate import simulate_jets
from jetid.timeselect import (
    _exhaustive_loop,
    _exhaustive_numpy,
    _greedy_rows_loop,
    _greedy_rows_numpy,
    column_norms,
    evaluate_basis,
    independence_report,
    select_times,
)


def single_jet(*channels):
    return JetSeries(np.array([0.0]), tuple(np.array([[v, d]]) for v, d in channels))


def test_lv_predator_row():
    lv = get_model("lotka_volterra")
    phi, _ = evaluate_basis(lv.block(1), single_jet((3.0, 0.0), (4.0, 0.0)))
    np.testing.assert_array_equal(phi, [[3.0, 4.0]])


def test_lv_prey_row():
    lv = get_model("lotka_volterra")
    phi, _ = evaluate_basis(lv.block(0), single_jet((2.0, 0.0), (1.0, 0.0)))
    np.testing.assert_array_equal(phi, [[2.0, 2.0, 4.0]])


def test_reactor_singular_evaluator_reports_time():
    r = get_model("reactor")
    t = np.array([0.0, 0.5, 1.0])
    jets = JetSeries(t, (np.array([[1.0, -1.0]] * 3), np.array([[350.0, -1.0], [0.0, -1.0], [340.0, -1.0]])))
    with pytest.raises(EvaluatorDomainError) as info:
        evaluate_basis(r.block(0), jets)
    assert info.value.context["time"] == 0.5


def test_constant_and_linear_exhaustive_pick():
    t = np.array([0.0, 0.5, 1.0])
    phi = np.column_stack([np.ones(3), t])
    sel = select_times(phi, 2, "exhaustive", times=t)
    assert sel.times == (0.0, 1.0)
    assert abs(np.linalg.det(phi[list(sel.indices)])) == pytest.approx(1.0)


@pytest.mark.parametrize("strategy", ["greedy", "exhaustive"])
def test_proportional_columns_fail(strategy):
    t = np.linspace(0.1, 1, 12)
    with pytest.raises(LinearDependenceError):
        select_times(np.column_stack([t, 2 * t]), 2, strategy)


def test_identity_pattern_has_unit_singular_value():
    sel = select_times(np.eye(4), 4, "exhaustive")
    assert sel.indices == (0, 1, 2, 3)
    assert sel.min_singular_value == pytest.approx(1.0)


def test_vandermonde_rank():
    t = np.linspace(0, 1, 50)
    rank, _ = independence_report(np.column_stack([np.ones_like(t), t, t**2]))
    assert rank == 3


def test_duplicated_and_zero_columns():
    t = np.linspace(0, 1, 20)
    assert independence_report(np.column_stack([t, t]))[0] == 1
    assert independence_report(np.column_stack([t, np.zeros_like(t)]))[0] == 1
    with pytest.raises(LinearDependenceError, match="vanishes"):
        select_times(np.column_stack([t, np.zeros_like(t)]), 2)


def test_tiny_columns_do_not_underflow():
    phi = np.full((8, 3), 1.5e-162)
    phi[[0, 1, 2], [0, 1, 2]] = 0.0
    sel = select_times(phi, 3, "exhaustive")
    assert sel.indices == (0, 1, 2)
    assert select_times(phi * 0.25, 3, "exhaustive").indices == (0, 1, 2)
    assert select_times(phi * 1e300, 3, "greedy").indices == select_times(phi, 3, "greedy").indices


def test_too_few_rows():
    with pytest.raises(LinearDependenceError):
        select_times(np.ones((1, 2)), 2)


def _matrices():
    n = st.integers(2, 12)
    q = st.integers(1, 4)

    @st.composite
    def build(draw):
        rows, cols = draw(n), draw(q)
        assume(cols <= rows)
        full = draw(arrays(np.float64, (rows, cols), elements=st.floats(-10, 10)))
        if draw(st.booleans()) and cols > 1:
            full[:, -1] = full[:, :-1] @ draw(arrays(np.float64, cols - 1, elements=st.floats(-3, 3)))
        return full

    return build()


def _passes(phi, strategy):
    try:
        select_times(phi, phi.shape[1], strategy)
        return True
    except LinearDependenceError:
        return False


@settings(max_examples=300, deadline=None)
@given(_matrices())
def test_greedy_and_exhaustive_agree(phi):
    sv = np.linalg.svd(phi / np.where(np.linalg.norm(phi, axis=0) > 0, np.linalg.norm(phi, axis=0), 1), compute_uv=False)
    # keep away from the tolerance boundary, where both answers are defensible
    assume(sv[-1] == 0 or sv[-1] / sv[0] > 1e-6 or sv[-1] / sv[0] < 1e-10)
    assert _passes(phi, "greedy") == _passes(phi, "exhaustive")


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, (8, 3), elements=st.floats(-5, 5)),
    arrays(np.float64, 3, elements=st.floats(0.01, 100)),
    arrays(np.bool_, 3),
)
def test_scale_invariance(phi, scale, flip):
    norms = column_norms(phi)
    assume(np.all(norms > 0))
    sv = np.linalg.svd(phi / norms, compute_uv=False)
    # near-singular matrices make competing determinants differ only by rounding
    assume(sv[-1] > 1e-6 * sv[0])
    scaled = phi * np.where(flip, -scale, scale)
    for strategy in ("greedy", "exhaustive"):
        a, b = _passes(phi, strategy), _passes(scaled, strategy)
        assert a == b
        if a:
            assert select_times(phi, 3, strategy).indices == select_times(scaled, 3, strategy).indices


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (10, 3), elements=st.floats(-5, 5)))
def test_kernels_match_numpy_twins(phi):
    norms = np.linalg.norm(phi, axis=0)
    assume(np.all(norms > 0))
    phin = np.ascontiguousarray(phi / norms)
    sv = np.linalg.svd(phin, compute_uv=False)
    # rank-deficient inputs pick rows from rounding noise; both twins then fail the rank test anyway
    assume(sv[-1] > 1e-6 * sv[0])
    np.testing.assert_array_equal(_greedy_rows_loop(phin, 3), _greedy_rows_numpy(phin, 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        np.testing.assert_array_equal(_exhaustive_loop(phin, 3), _exhaustive_numpy(phin, 3))


def test_exhaustive_maximizes_determinant():
    rng = np.random.default_rng(5)
    phi = rng.normal(size=(9, 3))
    sel = select_times(phi, 3, "exhaustive")
    phin = phi / np.linalg.norm(phi, axis=0)
    best = max(itertools.combinations(range(9), 3), key=lambda c: abs(np.linalg.det(phin[list(c)])))
    assert sel.indices == best


@pytest.mark.parametrize("name", MODEL_NAMES)
@pytest.mark.parametrize("a", [0.0, 2.5, 7.3])
def test_small_window_keeps_full_rank(name, a):
    model = get_model(name)
    d = DEFAULTS[name]
    jets = simulate_jets(model, d["x0"], d["theta"], (a, a + 0.1), 50)
    sigma = model.pmap.forward(d["theta"])
    offs = model.block_offsets()
    prior = {b.index: sigma[offs[b.index] : offs[b.index] + b.q] for b in model.blocks}
    for blk in model.blocks:
        phi, _ = evaluate_basis(blk, jets, prior)
        assert independence_report(phi)[0] == blk.q
        select_times(phi, blk.q, "greedy")
