"""Nesterov's accelerated projected gradient for smooth strongly convex problems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import engine
from .core import ConstraintSet, OracleCounter, as_vector, status_from_code


@dataclass(frozen=True)
class ScalarObjective:
    """An ``ell``-smooth, ``mu``-strongly convex function given by its gradient."""

    grad: Callable[[np.ndarray], np.ndarray]
    ell: float
    mu: float
    value: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if not (self.ell >= self.mu > 0):
            raise ValueError("need ell >= mu > 0")

    @property
    def kappa(self) -> float:
        return self.ell / self.mu


class AGDResult(NamedTuple):
    x: np.ndarray
    iters: int
    status: str


class _GradientAdapter:
    """Presents a single-variable gradient as the ``grad_x`` of a minimax oracle."""

    def __init__(self, grad):
        self._grad = grad

    def grad_x(self, x, y):
        return self._grad(x)


def agd_suggested_bound(kappa: float, ell: float, dist0_sq: float, eps: float) -> int:
    """ceil(10 sqrt(kappa) log(max(kappa^3 ell dist0_sq / eps, e))) + 10."""
    arg = max(kappa ** 3 * ell * dist0_sq / eps, math.e)
    return math.ceil(10.0 * math.sqrt(kappa) * math.log(arg)) + 10


def agd(obj: ScalarObjective, constraint: ConstraintSet, x0, eps: float,
        max_iter_cap: Optional[int] = None, counter: Optional[OracleCounter] = None) -> AGDResult:
    """Minimise ``obj`` over ``constraint`` to accuracy ``eps`` in function value.

    Stops when ``||x_t - P(x_t - grad/ell)||^2 <= eps / (2 kappa^2 (ell - mu))``
    and returns the projected-gradient image of ``x_t``.  Without an explicit
    cap the iteration budget is :func:`agd_suggested_bound` evaluated with the
    distance estimate ``2 kappa r0`` from the first gradient-mapping residual.
    Each iteration makes two gradient calls.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x0 = as_vector(x0, constraint.dim, "x0")
    cap = 0 if max_iter_cap is None else int(max_iter_cap)
    if max_iter_cap is not None and cap < 1:
        raise ValueError("max_iter_cap must be a positive integer")
    cnt = engine.new_counts()
    x, code, iters, _ = engine.PYTHON.agd_loop(
        _GradientAdapter(obj.grad), constraint.packed, 0, x0, x0,
        float(obj.ell), float(obj.mu), float(eps), 0.0, x0, cap, cnt)
    if counter is not None:
        counter.add_counts(cnt)
    return AGDResult(np.array(x, dtype=np.float64), int(iters), status_from_code(code))


def solve_partial(problem, side: int, fixed, start, ell: float, mu: float, eps: float,
                  cnt: np.ndarray, cap: int = 0) -> tuple[np.ndarray, str, int, bool]:
    """AGD on ``x -> f(x, fixed)`` (side 0) or ``y -> -f(fixed, y)`` (side 1)."""
    loops, data = engine.loops_for(problem)
    S = problem.set_x.packed if side == 0 else problem.set_y.packed
    x, code, iters, floored = loops.agd_loop(
        data, S, side, np.asarray(fixed, dtype=np.float64), np.asarray(start, dtype=np.float64),
        float(ell), float(mu), float(eps), 0.0, np.asarray(start, dtype=np.float64), int(cap), cnt)
    return np.array(x, dtype=np.float64), status_from_code(code), int(iters), bool(floored)


__all__ = ["ScalarObjective", "AGDResult", "agd", "agd_suggested_bound", "solve_partial"]
