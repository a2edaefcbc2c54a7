"""Built-in models.  Importing this package registers them."""
from __future__ import annotations

import numpy as np

from ..core import _REGISTRY, register_model
from .henon_heiles import make_henon_heiles
from .linparam import Control, make_linparam
from .lotka_volterra import make_lotka_volterra
from .reactor import make_reactor

__all__ = ["make_lotka_volterra", "make_reactor", "make_henon_heiles", "make_linparam", "Control", "DEFAULTS"]

# registry example for the linearly parameterized family:
# x' = theta1 + theta2 x + theta3 x^2 + u(t), u = 0.5 sin(t)
LINPARAM_DEFAULT_A = np.eye(3)

DEFAULTS = {
    "lotka_volterra": dict(theta=[2 / 3, 4 / 3, 1.0, 1.0], x0=[1.0, 2.0]),
    "reactor": dict(theta=[1.0, 2.0, 100.0], x0=[1.0, 0.0, 350.0]),
    "henon_heiles": dict(theta=[0.5, 0.5, 0.5, 0.5, 1.0, -1 / 3], x0=[0.1, -0.1, 0.2, 0.1]),
    "linparam": dict(theta=[0.5, -1.0, -0.2], x0=[0.3, 0.0]),
}


def _register_builtins():
    bundles = (
        make_lotka_volterra(),
        make_reactor(),
        make_henon_heiles(),
        make_linparam(LINPARAM_DEFAULT_A, rho=([0.0], [1.0]), control=Control("sinusoid", (0.5, 1.0, 0.0, 0.0))),
    )
    for bundle in bundles:
        if bundle["name"] not in _REGISTRY:
            register_model(**bundle)


_register_builtins()
