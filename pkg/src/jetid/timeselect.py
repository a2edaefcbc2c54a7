"""Choosing times at which a block's basis functions give a full-rank matrix.

A set of functions is linearly independent on a time set exactly when some
choice of ``q`` times makes the ``q x q`` evaluation matrix nonsingular.  On a
finite grid we look for such rows either greedily (pivoted Gram-Schmidt on
the rows) or by exhaustive search over all ``C(N, q)`` subsets.

Columns are normalized to unit 2-norm before any rank decision, so scaling a
basis function never changes which rows are picked or whether the selection
passes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Mapping

import numpy as np

from ._accel import NUMBA_ENABLED, kernel
from .core import JetSeries, RegressionBlock
from .errors import EvaluatorDomainError, LinearDependenceError

__all__ = [
    "SelectedTimes",
    "evaluate_basis",
    "select_times",
    "independence_report",
    "DEFAULT_RANK_TOL",
    "DEFAULT_GRID_N",
]

DEFAULT_RANK_TOL = 1e-8
DEFAULT_GRID_N = 200
MAX_EXHAUSTIVE_SUBSETS = 2_000_000
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SelectedTimes:
    indices: tuple[int, ...]
    times: tuple[float, ...]
    min_singular_value: float
    condition_number: float
    strategy: str


def _as_column(v, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(v, dtype=float), (n,)).astype(float)


def evaluate_basis(block: RegressionBlock, jets: JetSeries, prior_sigma: Mapping[int, np.ndarray] | None = None):
    """Basis matrix (rows = jet times) and target column of ``block``."""
    jets = JetSeries.from_jets(jets)
    n = len(jets)
    if n == 0:
        raise EvaluatorDomainError("no jets to evaluate", block=block.name)
    prior_sigma = prior_sigma or {}
    missing = [d for d, _ in block.depends_on if d not in prior_sigma]
    if missing:
        raise ValueError(f"block {block.name!r} needs sigma of blocks {missing}")
    with np.errstate(all="ignore"):
        cols = [_as_column(g(jets), n) for g in block.basis]
        target = _as_column(block.target(jets, prior_sigma), n)
    phi = np.column_stack(cols)
    bad = ~np.isfinite(phi).all(axis=1) | ~np.isfinite(target)
    if bad.any():
        k = int(np.argmax(bad))
        raise EvaluatorDomainError(
            f"block {block.name!r} evaluator is not finite at t={jets.t[k]:.6g}",
            block=block.name,
            time=float(jets.t[k]),
        )
    return phi, target


def column_norms(phi) -> np.ndarray:
    """Column 2-norms, scaled by each column's peak so tiny or huge entries neither underflow nor overflow."""
    phi = np.asarray(phi, dtype=float)
    peak = np.max(np.abs(phi), axis=0)
    return peak * np.linalg.norm(phi / np.where(peak > 0, peak, 1.0), axis=0)


def _normalize(phi: np.ndarray) -> np.ndarray:
    norms = column_norms(phi)
    safe = np.where(norms > 0, norms, 1.0)
    return phi / safe


def independence_report(basis_matrix, tol: float = DEFAULT_RANK_TOL):
    """Numerical rank and singular values of the column-normalized matrix."""
    phi = np.asarray(basis_matrix, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("basis matrix must be finite")
    sv = np.linalg.svd(_normalize(phi), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0, sv
    return int(np.sum(sv > tol * sv[0])), sv


@kernel
def _greedy_rows_loop(phi, q):
    n, c = phi.shape
    r = phi.copy()
    picked = np.full(q, -1, dtype=np.int64)
    used = np.zeros(n, dtype=np.bool_)
    norms = np.empty(n)
    for step in range(q):
        top = 0.0
        for i in range(n):
            s = 0.0
            if not used[i]:
                for j in range(c):
                    s += r[i, j] * r[i, j]
            norms[i] = s
            if s > top:
                top = s
        if top <= 0.0:
            break
        # lowest index among rows tied (to rounding) with the largest
        best = 0
        while norms[best] < top * (1.0 - TIE_RTOL):
            best += 1
        picked[step] = best
        used[best] = True
        v = r[best] / np.sqrt(norms[best])
        for i in range(n):
            d = 0.0
            for j in range(c):
                d += r[i, j] * v[j]
            for j in range(c):
                r[i, j] -= d * v[j]
    return picked


def _greedy_rows_numpy(phi, q):
    r = phi.copy()
    picked = np.full(q, -1, dtype=np.int64)
    used = np.zeros(len(r), dtype=bool)
    for step in range(q):
        norms = np.where(used, 0.0, np.einsum("ij,ij->i", r, r))
        top = norms.max()
        if top <= 0:
            break
        best = int(np.argmax(norms >= top * (1.0 - TIE_RTOL)))
        picked[step] = best
        used[best] = True
        v = r[best] / np.sqrt(norms[best])
        r -= np.outer(r @ v, v)
    return picked


@kernel
def _exhaustive_loop(phi, q):
    n = phi.shape[0]
    idx = np.arange(q)
    best = idx.copy()
    best_det = -1.0
    sub = np.empty((q, q))
    while True:
        for a in range(q):
            for b in range(q):
                sub[a, b] = phi[idx[a], b]
        d = abs(np.linalg.det(sub))
        if d > best_det * (1.0 + TIE_RTOL):
            best_det = d
            best[:] = idx
        # next combination in lexicographic order
        k = q - 1
        while k >= 0 and idx[k] == n - q + k:
            k -= 1
        if k < 0:
            break
        idx[k] += 1
        for j in range(k + 1, q):
            idx[j] = idx[j - 1] + 1
    return best


def _exhaustive_numpy(phi, q):
    combos = np.array(list(itertools.combinations(range(len(phi)), q)), dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):  # exactly singular subsets
        dets = np.abs(np.linalg.det(phi[combos]))
    best = 0
    for k in range(1, len(dets)):
        if dets[k] > dets[best] * (1.0 + TIE_RTOL):
            best = k
    return combos[best]


greedy_rows = _greedy_rows_loop if NUMBA_ENABLED else _greedy_rows_numpy
exhaustive_rows = _exhaustive_loop if NUMBA_ENABLED else _exhaustive_numpy


def select_times(
    basis_matrix,
    q: int | None = None,
    strategy: str = "greedy",
    tol: float = DEFAULT_RANK_TOL,
    times=None,
    label: str = "",
) -> SelectedTimes:
    """Pick ``q`` rows whose square submatrix is well conditioned.

    Raises :class:`LinearDependenceError` when the best pick has a smallest
    singular value below ``tol`` times the largest singular value of the whole
    (normalized) matrix.  On a grid this means the basis is dependent there:
    either truly dependent, or the grid is too coarse to show otherwise.
    """
    phi = np.ascontiguousarray(basis_matrix, dtype=float)
    n, c = phi.shape
    q = c if q is None else int(q)
    if q != c:
        raise ValueError(f"basis matrix has {c} columns, expected q={q}")
    if n < q:
        raise LinearDependenceError(f"{n} grid rows cannot determine {q} coefficients", block=label)
    times = np.arange(n, dtype=float) if times is None else np.asarray(times, dtype=float)
    norms = column_norms(phi)
    if np.any(norms == 0):
        raise LinearDependenceError("a basis function vanishes on the whole grid", block=label,
                                    columns=[int(i) for i in np.flatnonzero(norms == 0)])
    phin = phi / norms
    if strategy == "greedy":
        rows = greedy_rows(phin, q)
    elif strategy == "exhaustive":
        if comb(n, q) > MAX_EXHAUSTIVE_SUBSETS:
            raise ValueError(f"exhaustive search over C({n},{q}) subsets is too large")
        with np.errstate(divide="ignore", invalid="ignore"):  # exactly singular subsets
            rows = exhaustive_rows(phin, q)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    rows = np.asarray(rows, dtype=np.int64)
    smax = np.linalg.svd(phin, compute_uv=False)[0]
    if np.any(rows < 0):
        smin = 0.0
    else:
        smin = np.linalg.svd(phin[rows], compute_uv=False)[-1] / smax
    if not smin > tol:
        raise LinearDependenceError(
            f"basis{' of ' + repr(label) if label else ''} is linearly dependent on the grid "
            f"(relative smallest singular value {smin:.3g} <= {tol:g})",
            block=label,
            min_singular_value=float(smin),
        )
    order = np.sort(rows)
    cond = float(np.linalg.cond(phi[order]))
    return SelectedTimes(
        tuple(int(i) for i in order), tuple(float(times[i]) for i in order), float(smin), cond, strategy
    )
