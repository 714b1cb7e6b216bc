"""Dispatch between compiled and plain-Python execution of the inner loops.

Problems that carry a structured ``kernel`` tuple run the numba-compiled loops
from :mod:`minimaxkit._loops`.  Any other problem runs the very same loop code
(cloned from ``py_func``) with the primitives rebound to numpy and the
gradients to the problem's Python callables.
"""

from __future__ import annotations

import math
import types
from typing import Any

import numpy as np

from . import _loops


def _grad_x_into(prob, x, y, out):
    out[:] = np.asarray(prob.grad_x(x, y), dtype=np.float64)


def _grad_y_into(prob, x, y, out):
    out[:] = np.asarray(prob.grad_y(x, y), dtype=np.float64)


def _project_into(S, p, out):
    out[:] = _loops.project(S, p)


def _axpy_into(out, a, alpha, b):
    out[:] = a + alpha * b


def _extrapolate_into(out, x, theta, x_prev):
    out[:] = x + theta * (x - x_prev)


def _copy_into(out, src):
    out[:] = src


def _add_prox_into(out, sign, z, w, c):
    out *= sign
    if w != 0.0:
        out += 2.0 * w * (z - c)


def _sqdist(a, b):
    d = a - b
    return float(d @ d)


def _norm(v):
    return math.sqrt(float(v @ v))


def _finite(v):
    return bool(np.all(np.isfinite(v)))


_PY_PRIMITIVES = {
    "grad_x_into": _grad_x_into,
    "grad_y_into": _grad_y_into,
    "project_into": _project_into,
    "axpy_into": _axpy_into,
    "extrapolate_into": _extrapolate_into,
    "copy_into": _copy_into,
    "add_prox_into": _add_prox_into,
    "sqdist": _sqdist,
    "norm": _norm,
    "finite": _finite,
}
assert set(_PY_PRIMITIVES) == set(_loops.PRIMITIVE_NAMES)


def _python_namespace() -> types.SimpleNamespace:
    env: dict[str, Any] = dict(vars(_loops))
    env.update(_PY_PRIMITIVES)
    for name in _loops.LOOP_NAMES:
        src = getattr(_loops, name).py_func
        env[name] = types.FunctionType(src.__code__, env, name, src.__defaults__)
    return types.SimpleNamespace(**{n: env[n] for n in _loops.LOOP_NAMES})


COMPILED = types.SimpleNamespace(**{n: getattr(_loops, n) for n in _loops.LOOP_NAMES})
PYTHON = _python_namespace()


def loops_for(problem) -> tuple[types.SimpleNamespace, Any]:
    """Return the loop namespace and the oracle payload for ``problem``."""
    if getattr(problem, "kernel", None) is not None:
        return COMPILED, problem.kernel
    return PYTHON, problem


def new_counts() -> np.ndarray:
    return np.zeros(3, dtype=np.int64)
