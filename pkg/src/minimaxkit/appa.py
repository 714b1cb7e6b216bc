"""Inexact accelerated proximal point method with a pluggable prox solver."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import (NUMERICAL_FAILURE, ConstraintSet, SolverReport, as_vector)

# prox(center, ell, delta) -> w with g(w) + ell||w - center||^2 within delta of its minimum
ProxSolver = Callable[[np.ndarray, float, float], np.ndarray]


class APPAResult(NamedTuple):
    x: np.ndarray
    status: str
    report: SolverReport


def suggest_T(kappa: float, gap0_upper: float, eps: float) -> int:
    """Outer iterations certified by the (1 - 1/(6 sqrt(kappa)))^T contraction."""
    return math.ceil(6.0 * math.sqrt(kappa) * math.log(max(gap0_upper / eps, math.e)))


def inexact_appa(g_value: Optional[Callable[[np.ndarray], float]], constraint: ConstraintSet,
                 x0, ell: float, mu: float, eps: float, T: int, prox: ProxSolver,
                 record: bool = False) -> APPAResult:
    """Accelerated proximal point iterations with prox accuracy eps / (10 kappa)^2.

    ``g_value`` is only used when ``record`` is set, to log objective values
    alongside the iterates in ``report.extras``.
    """
    if not ell > mu > 0:
        raise ValueError("need ell > mu > 0")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    x0 = as_vector(x0, constraint.dim, "x0")
    kappa = ell / mu
    report = SolverReport()
    delta = report.clamp("delta", eps / (10.0 * kappa) ** 2, 0.0)
    theta = (2.0 * math.sqrt(kappa) - 1.0) / (2.0 * math.sqrt(kappa) + 1.0)

    x_prev = x0
    x_mom = x0
    iterates = [x0.copy()]
    for t in range(1, T + 1):
        x = np.asarray(prox(x_mom, ell, delta), dtype=np.float64)
        if x.shape != x0.shape or not np.all(np.isfinite(x)):
            report.set_status(NUMERICAL_FAILURE)
            report.outer_iters = t
            return APPAResult(x_prev, report.status, report)
        x_mom = x + theta * (x - x_prev)
        x_prev = x
        if record:
            iterates.append(x.copy())
    report.outer_iters = T
    report.extras["delta"] = delta
    if record:
        report.extras["iterates"] = iterates
        if g_value is not None:
            report.extras["values"] = [float(g_value(v)) for v in iterates]
    return APPAResult(x_prev.copy(), report.status, report)
