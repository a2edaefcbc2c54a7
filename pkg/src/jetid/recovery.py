"""Recovering parameters and the initial state from output jets.

Each regression block gives a small linear system for its coefficients at
well-chosen times; the coefficients are mapped back to parameters through the
inverse of the model's parameter map, and the initial state follows from the
inverse output map plus backward integration.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .core import IdentificationReport, JetSeries, Model, ParameterMap, RegressionBlock, SystemSpec
from .errors import (
    BlockFailure,
    ImageViolationError,
    InconsistencyError,
    JetError,
    JetIdError,
    NoValidTimeError,
    ResidualError,
    SingularBlockError,
)
from .jets import DEFAULT_STENCIL, numeric_jets
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, integrate_backward
from .timeselect import DEFAULT_GRID_N, DEFAULT_RANK_TOL, SelectedTimes, column_norms, evaluate_basis, select_times

__all__ = [
    "IdentifyConfig",
    "solve_block",
    "reconcile_sigma",
    "recover_theta",
    "recover_pointwise_ratios",
    "recover_initial_state",
    "identify",
]

SINGULAR_COND = 1e14


@dataclass(frozen=True)
class IdentifyConfig:
    window: tuple[float, float] | None = None
    grid_n: int = DEFAULT_GRID_N
    strategy: str = "greedy"
    rank_tol: float = DEFAULT_RANK_TOL
    solve_mode: str = "oversampled"
    ratio_guard: float = 1e-8
    redundancy_tol: float = 1e-4
    residual_tol: float | None = None
    image_tol: float | None = None
    stencil: int = DEFAULT_STENCIL
    t_tilde: float | None = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def with_(self, **kw) -> "IdentifyConfig":
        return replace(self, **kw)


def _relative_residual(phi, target, sigma) -> float:
    r = np.linalg.norm(phi @ sigma - target)
    scale = np.linalg.norm(target)
    if r == 0.0:
        return 0.0
    return float(r / scale) if scale > 0 else float(r)


def solve_block(
    block: RegressionBlock,
    selected: SelectedTimes,
    basis_matrix,
    target_column,
    mode: str = "oversampled",
    residual_tol: float | None = None,
):
    """Coefficients of ``block`` and the relative residual over all grid rows.

    ``square`` solves the ``q x q`` system at the selected times exactly;
    ``oversampled`` solves the least-squares problem over every row.  The
    residual is always measured on the full grid so both modes can flag a
    model/data mismatch.
    """
    phi = np.asarray(basis_matrix, dtype=float)
    target = np.asarray(target_column, dtype=float)
    norms = column_norms(phi)
    if np.any(norms == 0):
        raise SingularBlockError(f"block {block.name!r}: basis column vanishes", block=block.name)
    phin = phi / norms
    if mode == "square":
        rows = list(selected.indices)
        if len(rows) != block.q:
            raise ValueError(f"square mode needs {block.q} selected times, got {len(rows)}")
        sub = phin[rows]
        if not np.linalg.cond(sub) < SINGULAR_COND:
            raise SingularBlockError(f"block {block.name!r}: selected matrix is singular", block=block.name)
        coef = np.linalg.solve(sub, target[rows])
    elif mode == "oversampled":
        coef, *_ = np.linalg.lstsq(phin, target, rcond=None)
    else:
        raise ValueError(f"unknown solve mode {mode!r}")
    sigma = coef / norms
    res = _relative_residual(phi, target, sigma)
    if residual_tol is not None and res > residual_tol:
        raise ResidualError(
            f"block {block.name!r}: relative residual {res:.3g} exceeds {residual_tol:g} (model/data mismatch?)",
            block=block.name,
            residual=res,
        )
    return sigma, res


def reconcile_sigma(sigma, redundancy_pairs: Sequence[tuple[int, int]], tol: float = 1e-4) -> np.ndarray:
    """Check that redundant coefficients agree (relative ``tol``) and average them."""
    out = np.array(sigma, dtype=float)
    for i, j in redundancy_pairs:
        a, b = out[i], out[j]
        scale = max(abs(a), abs(b))
        if abs(a - b) > tol * scale:
            raise InconsistencyError(
                f"redundant coefficients disagree: sigma[{i}]={a:.10g}, sigma[{j}]={b:.10g}",
                index_pair=[i, j],
                values=[float(a), float(b)],
            )
        out[i] = out[j] = 0.5 * (a + b)
    return out


def recover_theta(sigma, pmap: ParameterMap, spec: SystemSpec | None = None, image_tol: float = 1e-10) -> np.ndarray:
    """Parameters from coefficients, with a round-trip check through ``pmap.forward``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (pmap.size,):
        raise ValueError(f"expected {pmap.size} coefficients, got {sigma.shape}")
    with np.errstate(all="ignore"):
        theta = np.asarray(pmap.inverse(sigma), dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ImageViolationError("coefficients map to non-finite parameters", sigma=sigma)
    if spec is not None and not spec.theta_member(theta):
        raise ImageViolationError("recovered parameters lie outside the admissible set", theta=theta)
    back = np.asarray(pmap.forward(theta), dtype=float)
    err = np.linalg.norm(back - sigma) / max(np.linalg.norm(sigma), 1e-300)
    if err > image_tol:
        raise ImageViolationError(
            f"coefficients are not in the image of the parameter map (relative mismatch {err:.3g})",
            theta=theta,
            mismatch=float(err),
        )
    return theta


def recover_pointwise_ratios(model: Model, jets, guard: float = 1e-8) -> dict[str, float]:
    """Median of each pointwise ratio over jets whose denominator exceeds ``guard``."""
    jets = JetSeries.from_jets(jets)
    out = {}
    for ratio in model.ratios:
        with np.errstate(all="ignore"):
            num = np.broadcast_to(np.asarray(ratio.numerator(jets), dtype=float), (len(jets),))
            den = np.broadcast_to(np.asarray(ratio.denominator(jets), dtype=float), (len(jets),))
        ok = np.isfinite(num) & np.isfinite(den) & (np.abs(den) > guard)
        if not ok.any():
            raise NoValidTimeError(f"no time with |denominator| > {guard:g} for ratio {ratio.name!r}", ratio=ratio.name)
        out[ratio.name] = float(np.median(num[ok] / den[ok]))
    return out


def recover_initial_state(
    spec: SystemSpec,
    jets,
    theta,
    t_tilde: float | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
):
    """Initial state and recoverable mask.

    The state at ``t_tilde`` (default: first jet time) comes from the inverse
    output map; it is carried back to ``t = 0`` by integrating the reversed
    field.  Unrecoverable coordinates are returned as NaN.
    """
    if spec.inverse_output_map is None:
        raise JetError("system has no inverse output map")
    jets = JetSeries.from_jets(jets)
    k = 0 if t_tilde is None else int(np.argmin(np.abs(jets.t - t_tilde)))
    if t_tilde is not None and not np.isclose(jets.t[k], t_tilde, rtol=0, atol=1e-12 * max(1.0, abs(t_tilde))):
        raise JetError(f"t_tilde={t_tilde} is not among the jet times")
    jet = jets[k]
    state, mask = spec.inverse_output_map(jet, np.asarray(theta, dtype=float))
    state = np.asarray(state, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if jet.t > 0:
        # masked coordinates hold placeholders, so the admissible-set check would be meaningless
        state = integrate_backward(spec, (jet.t, state), theta, 0.0, rtol=rtol, atol=atol, check_omega=bool(mask.all()))
        if not np.all(np.isfinite(state[mask])):
            raise JetError("backward integration produced non-finite state")
    x0 = np.where(mask, state, np.nan)
    return x0, mask


def _subsample(jets: JetSeries, n: int) -> JetSeries:
    if len(jets) <= n:
        return jets
    idx = np.unique(np.round(np.linspace(0, len(jets) - 1, n)).astype(int))
    return jets[idx]


def identify(model: Model, data, config: IdentifyConfig | None = None, **overrides) -> IdentificationReport:
    """Run the full recovery pipeline.

    ``data`` is either a :class:`JetSeries` (jets already computed, e.g. by
    :func:`jetid.simulate.simulate_jets`) or a pair ``(t, y)`` of uniformly
    sampled outputs, differentiated here with central differences.
    """
    cfg = (config or IdentifyConfig()).with_(**overrides) if overrides else (config or IdentifyConfig())
    spec = model.spec
    if isinstance(data, JetSeries):
        jets, derivatives = data, "analytic"
    elif isinstance(data, (list, tuple)) and len(data) and hasattr(data[0], "values"):
        jets, derivatives = JetSeries.from_jets(data), "analytic"
    else:
        t, y = data
        jets = numeric_jets(t, y, spec.derivative_orders, cfg.stencil)
        derivatives = "numeric"
    if jets.output_dim != spec.output_dim:
        raise JetError(f"data has {jets.output_dim} channels, model expects {spec.output_dim}")
    if cfg.window is not None:
        a, b = cfg.window
        jets = jets.window(a, b)
    else:
        a, b = float(jets.t[0]), np.inf
    jets = _subsample(jets, cfg.grid_n)
    if len(jets) == 0:
        raise JetError("no data inside the window", window=[a, b])
    if not np.isfinite(b):
        b = float(jets.t[-1])
    if model.data_check is not None:
        model.data_check(jets)

    image_tol = cfg.image_tol if cfg.image_tol is not None else (1e-10 if derivatives == "analytic" else 1e-4)

    prior: dict[int, np.ndarray] = {}
    residuals, conds, smins, times_used = {}, {}, {}, {}
    for j in model.order:
        block = model.block(j)
        try:
            phi, target = evaluate_basis(block, jets, prior)
            sel = select_times(phi, block.q, cfg.strategy, cfg.rank_tol, times=jets.t, label=block.name)
            sigma_j, res = solve_block(block, sel, phi, target, cfg.solve_mode, cfg.residual_tol)
        except JetIdError as exc:
            raise BlockFailure(block.name, exc) from exc
        prior[j] = sigma_j
        residuals[block.name] = res
        conds[block.name] = sel.condition_number
        smins[block.name] = sel.min_singular_value
        times_used[block.name] = list(sel.times)

    ordered = sorted(model.blocks, key=lambda b_: b_.index)
    raw = np.concatenate([prior[b_.index] for b_ in ordered])
    sigma = reconcile_sigma(raw, model.pmap.redundancy_pairs, cfg.redundancy_tol)
    ratios = recover_pointwise_ratios(model, jets, cfg.ratio_guard)
    full = np.concatenate([sigma, [ratios[name] for name in model.pmap.ratio_names]])
    theta = recover_theta(full, model.pmap, spec, image_tol=image_tol)

    t_tilde = float(jets.t[0]) if cfg.t_tilde is None else float(cfg.t_tilde)
    x0, mask = recover_initial_state(spec, jets, theta, t_tilde, cfg.rtol, cfg.atol)

    offsets = model.block_offsets()
    distinct = {t for ts in times_used.values() for t in ts} | {t_tilde}
    return IdentificationReport(
        model=model.name,
        theta_hat=theta,
        x0_hat=x0,
        x0_mask=mask,
        sigma={b_.name: sigma[offsets[b_.index] : offsets[b_.index] + b_.q] for b_ in ordered},
        sigma_raw={b_.name: prior[b_.index] for b_ in ordered},
        ratios=ratios,
        residual_norms=residuals,
        condition_numbers=conds,
        min_singular_values=smins,
        times_used=times_used,
        t_tilde=t_tilde,
        distinct_times=len(distinct),
        modes={
            "derivatives": derivatives,
            "solve": cfg.solve_mode,
            "strategy": cfg.strategy,
            "window": [float(a), float(b)],
            "grid_n": len(jets),
            "stencil": cfg.stencil if derivatives == "numeric" else None,
        },
    )
