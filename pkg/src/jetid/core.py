"""Domain types shared across the package and the model registry."""
from __future__ import annotations

import graphlib
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import JetError, RegistrationError

__all__ = [
    "SystemSpec",
    "OutputJet",
    "JetSeries",
    "RegressionBlock",
    "PointwiseRatio",
    "ParameterMap",
    "Model",
    "IdentificationReport",
    "register_model",
    "get_model",
    "list_models",
    "unregister_model",
]


def _always(*_args) -> bool:
    return True


@dataclass(frozen=True)
class SystemSpec:
    """An autonomous system ``x' = f(x, theta)``, ``y = h(x, theta)``.

    ``rhs(x, theta, aux)`` is the vector field in kernel form: it only uses
    scalar arithmetic and ``np.empty`` so it can be compiled with numba and
    handed to the integrator.  ``aux`` carries model constants that are not
    parameters (for instance the coefficient matrix of a linearly
    parameterized system).

    ``analytic_jet(states, theta)`` takes a ``(N, n)`` array of states and
    returns, per output channel, a ``(N, d_i + 1)`` array with the closed-form
    output and its Lie derivatives.

    ``inverse_output_map(jet, theta)`` returns ``(state, mask)``; entries with
    ``mask == False`` are not determined by the outputs and hold a
    placeholder.
    """

    state_dim: int
    param_dim: int
    output_dim: int
    rhs: Callable
    output: Callable
    derivative_orders: tuple[int, ...]
    analytic_jet: Callable | None = None
    omega_member: Callable = _always
    theta_member: Callable = _always
    inverse_output_map: Callable | None = None
    aux: np.ndarray = field(default_factory=lambda: np.zeros(0))
    state_names: tuple[str, ...] = ()
    param_names: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("state_dim", "param_dim", "output_dim"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if len(self.derivative_orders) != self.output_dim:
            raise ValueError("one derivative order per output channel is required")
        if any(d < 0 for d in self.derivative_orders):
            raise ValueError("derivative orders must be non-negative")
        object.__setattr__(self, "aux", np.ascontiguousarray(self.aux, dtype=float))

    def f(self, x, theta) -> np.ndarray:
        return self.rhs(np.asarray(x, dtype=float), np.asarray(theta, dtype=float), self.aux)

    def h(self, x, theta) -> np.ndarray:
        return np.asarray(self.output(np.asarray(x, dtype=float), np.asarray(theta, dtype=float)))

    def jet(self, x, theta, t: float = 0.0) -> "OutputJet":
        if self.analytic_jet is None:
            raise JetError("system has no analytic jet")
        vals = self.analytic_jet(np.atleast_2d(np.asarray(x, dtype=float)), np.asarray(theta, dtype=float))
        return OutputJet(float(t), tuple(np.asarray(v)[0] for v in vals))


class _JetAccess:
    def y(self, channel: int, order: int = 0):
        """Output ``channel`` differentiated ``order`` times."""
        return self.values[channel][..., order]

    @property
    def output_dim(self) -> int:
        return len(self.values)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(v.shape[-1] - 1 for v in self.values)


@dataclass(frozen=True)
class OutputJet(_JetAccess):
    """Output values and derivatives of every channel at a single time."""

    t: float
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        vals = tuple(np.asarray(v, dtype=float).reshape(-1) for v in self.values)
        if not all(np.all(np.isfinite(v)) for v in vals):
            raise JetError("jet entries must be finite", t=self.t)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class JetSeries(_JetAccess):
    """Jets at a sequence of times, stored channel-wise as ``(N, d_i + 1)``.

    Block evaluators receive a whole series and use ``y(channel, order)``,
    which returns an ``(N,)`` array here and a scalar on an ``OutputJet``, so
    one evaluator serves both.
    """

    t: np.ndarray
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        vals = tuple(np.asarray(v, dtype=float).reshape(len(t), -1) for v in self.values)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return OutputJet(float(self.t[key]), tuple(v[key] for v in self.values))
        return JetSeries(self.t[key], tuple(v[key] for v in self.values))

    def window(self, a: float, b: float) -> "JetSeries":
        """Jets with ``a <= t < b``."""
        return self[(self.t >= a) & (self.t < b)]

    @classmethod
    def from_jets(cls, jets: Sequence[OutputJet]) -> "JetSeries":
        if isinstance(jets, JetSeries):
            return jets
        if not jets:
            raise JetError("no jets given")
        m = jets[0].output_dim
        return cls(
            np.array([j.t for j in jets]),
            tuple(np.stack([j.values[i] for j in jets]) for i in range(m)),
        )


@dataclass(frozen=True)
class RegressionBlock:
    """One linear relation ``target = sum_l sigma_l * basis_l`` along the jets.

    ``target(jets, prior)`` may read components of earlier blocks' solutions
    from ``prior`` (a mapping ``block index -> sigma vector``); each such read
    must be declared in ``depends_on`` as ``(block index, component)``.
    """

    index: int
    target: Callable[[Any, Mapping[int, np.ndarray]], Any]
    basis: tuple[Callable[[Any], Any], ...]
    depends_on: tuple[tuple[int, int], ...] = ()
    label: str = ""
    basis_labels: tuple[str, ...] = ()

    @property
    def q(self) -> int:
        return len(self.basis)

    @property
    def name(self) -> str:
        return self.label or f"block{self.index}"


@dataclass(frozen=True)
class PointwiseRatio:
    """A parameter read off directly as ``numerator / denominator`` at any time."""

    name: str
    numerator: Callable[[Any], Any]
    denominator: Callable[[Any], Any]
    label: str = ""


@dataclass(frozen=True)
class ParameterMap:
    """The injective map ``r`` from parameters to regression coefficients.

    ``forward(theta)`` returns the block coefficients (``q`` entries, blocks
    concatenated in index order) followed by one entry per pointwise ratio.
    ``inverse`` accepts a vector of the same layout.
    """

    q: int
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    redundancy_pairs: tuple[tuple[int, int], ...] = ()
    ratio_names: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return self.q + len(self.ratio_names)


@dataclass(frozen=True)
class Model:
    """A registered model: system, regression blocks, parameter map."""

    name: str
    spec: SystemSpec
    blocks: tuple[RegressionBlock, ...]
    pmap: ParameterMap
    ratios: tuple[PointwiseRatio, ...] = ()
    order: tuple[int, ...] = ()
    data_check: Callable | None = None
    description: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict)

    def block_offsets(self) -> dict[int, int]:
        """Start of each block's coefficients in the flat sigma vector."""
        offsets, pos = {}, 0
        for blk in sorted(self.blocks, key=lambda b: b.index):
            offsets[blk.index] = pos
            pos += blk.q
        return offsets

    def block(self, index: int) -> RegressionBlock:
        for blk in self.blocks:
            if blk.index == index:
                return blk
        raise KeyError(index)


@dataclass
class IdentificationReport:
    model: str
    theta_hat: np.ndarray
    x0_hat: np.ndarray
    x0_mask: np.ndarray
    sigma: dict[str, np.ndarray]
    sigma_raw: dict[str, np.ndarray]
    ratios: dict[str, float]
    residual_norms: dict[str, float]
    condition_numbers: dict[str, float]
    min_singular_values: dict[str, float]
    times_used: dict[str, list[float]]
    t_tilde: float
    distinct_times: int
    modes: dict[str, Any]

    def to_dict(self) -> dict:
        def arr(v):
            return [None if not np.isfinite(x) else float(x) for x in np.asarray(v, dtype=float)]

        return {
            "model": self.model,
            "theta_hat": arr(self.theta_hat),
            "x0_hat": arr(self.x0_hat),
            "x0_recoverable": [bool(b) for b in self.x0_mask],
            "sigma": {k: arr(v) for k, v in self.sigma.items()},
            "sigma_raw": {k: arr(v) for k, v in self.sigma_raw.items()},
            "ratios": {k: float(v) for k, v in self.ratios.items()},
            "residual_norms": {k: float(v) for k, v in self.residual_norms.items()},
            "condition_numbers": {k: float(v) for k, v in self.condition_numbers.items()},
            "min_singular_values": {k: float(v) for k, v in self.min_singular_values.items()},
            "times_used": {k: [float(t) for t in v] for k, v in self.times_used.items()},
            "t_tilde": float(self.t_tilde),
            "distinct_times": int(self.distinct_times),
            "modes": dict(self.modes),
        }


_REGISTRY: dict[str, Model] = {}
_LOCK = threading.Lock()


def _topological_order(blocks: Sequence[RegressionBlock]) -> tuple[int, ...]:
    indices = {b.index for b in blocks}
    if len(indices) != len(blocks):
        raise RegistrationError("block indices must be unique")
    sorter = graphlib.TopologicalSorter()
    for b in blocks:
        deps = {d for d, _ in b.depends_on}
        unknown = deps - indices
        if unknown:
            raise RegistrationError(f"block {b.name!r} depends on unknown blocks {sorted(unknown)}")
        if b.index in deps:
            raise RegistrationError(f"block {b.name!r} depends on itself", cycle=[b.index])
        sorter.add(b.index, *deps)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        raise RegistrationError("cyclic block dependencies", cycle=list(exc.args[1])) from None
    order = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready())
        order.extend(ready)
        sorter.done(*ready)
    return tuple(order)


def build_model(
    name: str,
    spec: SystemSpec,
    blocks: Sequence[RegressionBlock],
    pmap: ParameterMap,
    ratios: Sequence[PointwiseRatio] = (),
    **kwargs,
) -> Model:
    """Validate a model bundle without registering it."""
    total = sum(b.q for b in blocks)
    if total != pmap.q:
        raise RegistrationError(f"block sizes sum to {total} but the parameter map has q={pmap.q}")
    if len(ratios) != len(pmap.ratio_names):
        raise RegistrationError("one parameter-map ratio slot per pointwise ratio is required")
    for b in blocks:
        if b.q < 1:
            raise RegistrationError(f"block {b.name!r} has an empty basis")
        for dep, comp in b.depends_on:
            other = next((o for o in blocks if o.index == dep), None)
            if other is not None and not 0 <= comp < other.q:
                raise RegistrationError(f"block {b.name!r} reads component {comp} of block {dep} (q={other.q})")
    for i, j in pmap.redundancy_pairs:
        if not (0 <= i < total and 0 <= j < total):
            raise RegistrationError(f"redundancy pair {(i, j)} outside sigma range")
    order = _topological_order(blocks)
    return Model(name, spec, tuple(blocks), pmap, tuple(ratios), order, **kwargs)


def register_model(
    name: str,
    spec: SystemSpec,
    blocks: Sequence[RegressionBlock],
    pmap: ParameterMap,
    ratios: Sequence[PointwiseRatio] = (),
    **kwargs,
) -> Model:
    model = build_model(name, spec, blocks, pmap, ratios, **kwargs)
    with _LOCK:
        if name in _REGISTRY:
            raise RegistrationError(f"model {name!r} already registered")
        _REGISTRY[name] = model
    return model


def get_model(name: str) -> Model:
    from . import models  # noqa: F401  (registers the built-in models)

    try:
        return _REGISTRY[name]
    except KeyError:
        raise RegistrationError(f"unknown model {name!r}", available=sorted(_REGISTRY)) from None


def list_models() -> list[str]:
    from . import models  # noqa: F401

    return sorted(_REGISTRY)


def unregister_model(name: str) -> None:
    with _LOCK:
        _REGISTRY.pop(name, None)
