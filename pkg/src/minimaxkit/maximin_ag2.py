"""Two-timescale accelerated solver for strongly-convex-strongly-concave problems.

The outer loop runs accelerated projected ascent on ``Psi(y) = min_x g(x, y)``
with step ``1/(2 kappa_x ell)``; every ascent step re-solves the inner
minimisation with AGD started from the original ``x0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import engine
from .core import (MISSING_DIAMETER, MinimaxProblem, OracleCounter, SolveResult,
                   SolverReport, as_vector, status_from_code)

MODES = ("faithful", "practical")
CLAMP_REL = 1e-14


def _exponents(mode: str) -> tuple[int, int]:
    if mode == "faithful":
        return 7, 4
    if mode == "practical":
        return 2, 2
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class MaximinPlan:
    """Tolerances and caps shared by every call with the same constants."""

    ell: float
    mu_x: float
    mu_y: float
    eps: float
    inner_eps: float
    stop_sq: float
    outer_cap: int
    agd_cap: int = 0
    warm_start: bool = False


def plan_maximin(ell: float, mu_x: float, mu_y: float, eps: float, diam_y: float,
                 mode: str, report: SolverReport, outer_cap: Optional[int] = None,
                 agd_cap: Optional[int] = None, warm_start: bool = False,
                 label: str = "maximin") -> MaximinPlan:
    """Compute the inner AGD accuracy, the squared stopping threshold and the cap.

    Values below ``1e-14`` times their natural scale (``eps`` for accuracies,
    ``eps/ell`` for squared thresholds) are raised to that floor and the clamp
    is logged in ``report``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not (ell > 0 and mu_x > 0 and mu_y > 0):
        raise ValueError("maximin solver needs ell, mu_x, mu_y > 0")
    p_inner, p_stop = _exponents(mode)
    kx, ky = ell / mu_x, ell / mu_y
    base = 10.0 * kx * ky
    inner = report.clamp(f"{label}.inner_eps", eps / base ** p_inner, CLAMP_REL * eps)
    stop = report.clamp(f"{label}.stop_sq", eps / (base ** p_stop * ell), CLAMP_REL * eps / ell)
    if outer_cap is None:
        outer_cap = math.ceil(20.0 * math.sqrt(kx * ky) * math.log(ell * diam_y ** 2 / eps + math.e))
    return MaximinPlan(ell, mu_x, mu_y, eps, inner, stop, int(outer_cap),
                       0 if agd_cap is None else int(agd_cap), warm_start)


def run_maximin(problem: MinimaxProblem, plan: MaximinPlan, x0: np.ndarray, y0: np.ndarray,
                cnt: np.ndarray, prox_weight: float = 0.0,
                prox_center: Optional[np.ndarray] = None):
    """Run the loop on ``g = f + prox_weight ||x - prox_center||^2``.

    Returns ``(x_hat, x_t, y_t, status, outer_iters, inner_iters, floored)``.
    """
    loops, data = engine.loops_for(problem)
    center = x0 if prox_center is None else prox_center
    out = loops.maximin_loop(
        data, problem.set_x.packed, problem.set_y.packed, x0, y0,
        plan.ell, plan.mu_x, plan.mu_y, plan.inner_eps, plan.stop_sq,
        float(prox_weight), np.asarray(center, dtype=np.float64),
        plan.outer_cap, plan.agd_cap, plan.warm_start, cnt)
    x_hat, x_t, y_t, code, outer, inner, floored = out
    return (np.array(x_hat, dtype=np.float64), np.array(x_t, dtype=np.float64),
            np.array(y_t, dtype=np.float64), status_from_code(code), int(outer), int(inner),
            bool(floored))


def maximin_ag2(g: MinimaxProblem, x0, y0, ell: Optional[float] = None,
                mu_x: Optional[float] = None, mu_y: Optional[float] = None,
                eps: float = 1e-3, *, mode: str = "faithful", outer_cap: Optional[int] = None,
                agd_cap: Optional[int] = None, warm_start: bool = False,
                counter: Optional[OracleCounter] = None) -> SolveResult:
    """Approximate ``argmin_x max_y g(x, y)`` to primal accuracy ``eps``.

    Constants default to the problem's smoothness profile.  ``warm_start``
    starts each inner AGD from the previous inner solution instead of ``x0``;
    it departs from the reference scheme and exists for experiments only.
    The returned ``y`` is the last ascent iterate.
    """
    prof = g.profile
    ell = prof.ell if ell is None else ell
    mu_x = prof.mu_x if mu_x is None else mu_x
    mu_y = prof.mu_y if mu_y is None else mu_y
    x0 = as_vector(x0, g.dim_x, "x0")
    y0 = as_vector(y0, g.dim_y, "y0")
    report = SolverReport()
    report.extras["mode"] = mode
    if warm_start:
        report.extras["warm_start"] = True
    diam_y = g.set_y.diameter()
    if diam_y is None:
        report.set_status(MISSING_DIAMETER)
        return SolveResult(x0.copy(), y0.copy(), report)
    plan = plan_maximin(ell, mu_x, mu_y, eps, diam_y, mode, report, outer_cap, agd_cap, warm_start)
    cnt = engine.new_counts()
    x_hat, _, y_t, status, outer, inner, floored = run_maximin(g, plan, x0, y0, cnt)
    report.set_status(status)
    report.outer_iters = outer
    report.inner_iters = inner
    report.note_fp_floor(floored)
    report.counter.add_counts(cnt)
    if counter is not None:
        counter.add_counts(cnt)
    return SolveResult(x_hat, y_t, report)
