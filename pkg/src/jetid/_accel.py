"""Optional numba acceleration.

Hot kernels are written once in a numba-compatible subset of Python and
decorated with :func:`kernel`.  When numba is importable and the environment
variable ``JETID_NUMBA`` is not set to ``0`` they are compiled with
``numba.njit``; otherwise the plain Python functions are used.  Every kernel
keeps a reference to the uncompiled function in ``py_func`` so both paths can
be exercised side by side (tests, ``benchmarks/bench_kernels.py``).

Vector fields use :func:`rhs_kernel`, which compiles eagerly for the fixed
signature ``float64[::1](float64[::1], float64[::1], float64[::1])``.  The
integrator takes the field as a first-class function of that type, so one
cached integrator serves every model instead of being recompiled per field.
"""
from __future__ import annotations

import os

try:
    import numba
    from numba import types as _nt
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("JETID_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if NUMBA_AVAILABLE:
    _vec = _nt.float64[::1]
    RHS_SIGNATURE = _vec(_vec, _vec, _vec)
    RHS_TYPE = _nt.FunctionType(RHS_SIGNATURE)
else:  # pragma: no cover
    RHS_SIGNATURE = RHS_TYPE = None


def _compile(func, signature):
    args = () if signature is None else (signature,)
    try:
        return numba.njit(*args, cache=True)(func)
    except RuntimeError:
        # no cache locator (interactive or generated source)
        return numba.njit(*args)(func)


def kernel(func=None, *, signature=None):
    """Compile ``func`` with numba when enabled, else return it untouched.

    Usable bare (lazy compilation) or as ``@kernel(signature=...)`` for an
    eager, cacheable compilation.
    """
    if func is None:
        return lambda f: kernel(f, signature=signature)
    if NUMBA_ENABLED:
        return _compile(func, signature)
    func.py_func = func
    return func


def rhs_kernel(func):
    """:func:`kernel` for vector fields ``rhs(x, theta, aux) -> xdot``."""
    return kernel(func, signature=RHS_SIGNATURE)


def is_compiled(func) -> bool:
    return NUMBA_AVAILABLE and isinstance(func, numba.core.dispatcher.Dispatcher)
