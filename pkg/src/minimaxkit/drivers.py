"""Proximal-point drivers built on the two-timescale solver, and the
regularisation reductions that extend them to weaker curvature assumptions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import engine
from .agd import solve_partial
from .core import (MISSING_DIAMETER, NUMERICAL_FAILURE, MinimaxProblem, MissingDiameterError,
                   OracleCounter, SolveResult, SolverReport, add_quadratic_regularizer, as_vector)
from .maximin_ag2 import CLAMP_REL, _exponents, plan_maximin, run_maximin

REDUCTION_KINDS = ("scc", "cc", "nc", "nc_moreau")


# ---------------------------------------------------------------------------
# reductions


@dataclass(frozen=True)
class ReductionSpec:
    kind: str
    eps: float
    x0: Optional[np.ndarray] = None
    y0: Optional[np.ndarray] = None


def reduction_coefficients(kind: str, eps: float, ell: float,
                           diam_x: Optional[float], diam_y: Optional[float]) -> tuple[float, float]:
    """Coefficients (cx, cy) of the added term ``cx||x-x0||^2 - cy||y-y0||^2``."""
    if kind not in REDUCTION_KINDS:
        raise ValueError(f"unknown reduction {kind!r}")
    if diam_y is None:
        raise MissingDiameterError("reduction needs a bounded y-set")
    if kind == "scc":
        return 0.0, eps / (4.0 * diam_y ** 2)
    if kind == "cc":
        if diam_x is None:
            raise MissingDiameterError("cc reduction needs a bounded x-set")
        return eps / (8.0 * diam_x ** 2), eps / (8.0 * diam_y ** 2)
    if kind == "nc":
        return 0.0, eps / (4.0 * diam_y)
    return 0.0, eps ** 2 / (200.0 * ell * diam_y ** 2)


def reduce(base: MinimaxProblem, spec: ReductionSpec) -> MinimaxProblem:
    """Add the reduction's quadratic regulariser to the value and both gradients.

    The profile gains ``2 cx`` on ``mu_x``, ``2 cy`` on ``mu_y`` and the larger
    of the two on ``ell``.
    """
    if spec.eps < 0 or (spec.kind == "nc" and spec.eps == 0):
        raise ValueError("reduction eps must be positive")
    prof = base.profile
    diam_x = base.set_x.diameter() if prof.diam_x is None else prof.diam_x
    diam_y = base.set_y.diameter() if prof.diam_y is None else prof.diam_y
    cx, cy = reduction_coefficients(spec.kind, spec.eps, prof.ell, diam_x, diam_y)
    if cx == 0.0 and cy == 0.0:
        return base
    x0 = np.zeros(base.dim_x) if spec.x0 is None else spec.x0
    y0 = np.zeros(base.dim_y) if spec.y0 is None else spec.y0
    base = base.with_profile(diam_x=diam_x, diam_y=diam_y)
    return add_quadratic_regularizer(base, cx, x0, cy, y0, f"{base.name}+{spec.kind}")


# ---------------------------------------------------------------------------
# strongly-convex-strongly-concave


def _start(f: MinimaxProblem, x0, y0) -> tuple[np.ndarray, np.ndarray]:
    return as_vector(x0, f.dim_x, "x0"), as_vector(y0, f.dim_y, "y0")


def _finish(report: SolverReport, cnt: np.ndarray, counter: Optional[OracleCounter]) -> None:
    report.counter.add_counts(cnt)
    if counter is not None:
        counter.add_counts(cnt)


def minimax_appa(f: MinimaxProblem, x0, y0, ell: Optional[float] = None,
                 mu_x: Optional[float] = None, mu_y: Optional[float] = None,
                 eps: float = 1e-3, T: int = 1, *, mode: str = "faithful",
                 outer_cap: Optional[int] = None, agd_cap: Optional[int] = None,
                 counter: Optional[OracleCounter] = None) -> SolveResult:
    """Accelerated proximal point in x; each prox step is a two-timescale solve.

    Iterate ``x_t = argmin-approx max_y f(x, y) + ell||x - x~_{t-1}||^2`` with
    momentum on the centres, then recover ``y`` by AGD on ``-f(x_T, .)``
    followed by one projected ascent step.
    """
    prof = f.profile
    ell = prof.ell if ell is None else ell
    mu_x = prof.mu_x if mu_x is None else mu_x
    mu_y = prof.mu_y if mu_y is None else mu_y
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if not (mu_x > 0 and mu_y > 0):
        raise ValueError("minimax_appa needs mu_x > 0 and mu_y > 0")
    x0, y0 = _start(f, x0, y0)
    report = SolverReport()
    report.extras["mode"] = mode
    diam_y = f.set_y.diameter() if prof.diam_y is None else prof.diam_y
    if diam_y is None:
        report.set_status(MISSING_DIAMETER)
        return SolveResult(x0.copy(), y0.copy(), report)

    kx, ky = ell / mu_x, ell / mu_y
    _, p_stop = _exponents(mode)
    base = 10.0 * kx * ky
    delta = report.clamp("appa.delta", eps / base ** p_stop, CLAMP_REL * eps)
    eps_y = report.clamp("appa.final_eps", eps / (100.0 * kx * ky), CLAMP_REL * eps)
    plan = plan_maximin(3.0 * ell, 2.0 * ell, mu_y, delta, diam_y, mode, report,
                        outer_cap, agd_cap, label="appa.maximin")
    theta = (2.0 * math.sqrt(kx) - 1.0) / (2.0 * math.sqrt(kx) + 1.0)

    cnt = engine.new_counts()
    x_prev, x_mom = x0, x0
    sub_outer = 0
    for t in range(1, T + 1):
        x, _, _, status, outer, inner, floored = run_maximin(f, plan, x0, y0, cnt, ell, x_mom)
        report.set_status(status)
        report.note_fp_floor(floored)
        sub_outer += outer
        report.inner_iters += inner
        report.outer_iters = t
        if status == NUMERICAL_FAILURE:
            _finish(report, cnt, counter)
            return SolveResult(x, y0.copy(), report)
        x_mom = x + theta * (x - x_prev)
        x_prev = x
    report.extras["maximin_outer_iters"] = sub_outer

    y_mid, status, iters, floored = solve_partial(f, 1, x_prev, y0, ell, mu_y, eps_y, cnt)
    report.set_status(status)
    report.note_fp_floor(floored)
    report.inner_iters += iters
    cnt[1] += 1
    g = np.asarray(f.grad_y(x_prev, y_mid), dtype=np.float64)
    y = f.set_y.project(y_mid + g / (2.0 * kx * ell))
    if not np.all(np.isfinite(y)):
        report.set_status(NUMERICAL_FAILURE)
    _finish(report, cnt, counter)
    return SolveResult(x_prev.copy(), y, report)


def suggest_T_appa(kappa_x: float, gap0_upper: float, eps: float, c: float = 6.0) -> int:
    """ceil(c sqrt(kappa_x) log(max(gap0_upper / eps, e))).

    The outer loop is accelerated proximal point on ``max_y f(., y)``, so this is
    :func:`minimaxkit.appa.suggest_T` with the rate constant exposed; ``c = 6``
    is the certified constant.
    """
    return max(1, math.ceil(c * math.sqrt(kappa_x) * math.log(max(gap0_upper / eps, math.e))))


def _reduced_solve(kind: str, f: MinimaxProblem, x0, y0, eps: float):
    x0, y0 = _start(f, x0, y0)
    try:
        fr = reduce(f, ReductionSpec(kind, eps, x0, y0))
    except MissingDiameterError:
        report = SolverReport()
        report.set_status(MISSING_DIAMETER)
        return None, x0, y0, report
    return fr, x0, y0, None


def scc_solve(f: MinimaxProblem, x0, y0, ell: Optional[float] = None,
              mu_x: Optional[float] = None, eps: float = 1e-2, T: int = 1, **kw) -> SolveResult:
    """Strongly-convex-concave problems: regularise y by eps/(4 D_y^2) and solve to eps/2."""
    ell = f.profile.ell if ell is None else ell
    mu_x = f.profile.mu_x if mu_x is None else mu_x
    fr, x0, y0, failed = _reduced_solve("scc", f, x0, y0, eps)
    if failed is not None:
        return SolveResult(x0, y0, failed)
    d = fr.profile.diam_y
    res = minimax_appa(fr, x0, y0, ell, mu_x, eps / (4.0 * d ** 2), eps / 2.0, T, **kw)
    res.report.extras["reduction"] = "scc"
    return res


def cc_solve(f: MinimaxProblem, x0, y0, ell: Optional[float] = None, eps: float = 1e-2,
             T: int = 1, **kw) -> SolveResult:
    """Convex-concave problems: regularise both blocks and solve to eps/2."""
    ell = f.profile.ell if ell is None else ell
    fr, x0, y0, failed = _reduced_solve("cc", f, x0, y0, eps)
    if failed is not None:
        return SolveResult(x0, y0, failed)
    dx, dy = fr.profile.diam_x, fr.profile.diam_y
    res = minimax_appa(fr, x0, y0, ell, eps / (4.0 * dx ** 2), eps / (4.0 * dy ** 2), eps / 2.0, T, **kw)
    res.report.extras["reduction"] = "cc"
    return res


# ---------------------------------------------------------------------------
# nonconvex-strongly-concave


def minimax_ppa(f: MinimaxProblem, x0, y0, ell: Optional[float] = None,
                mu_y: Optional[float] = None, eps: float = 1e-2, T: int = 1,
                seed: Optional[int] = None, *, mode: str = "faithful",
                outer_cap: Optional[int] = None, agd_cap: Optional[int] = None,
                counter: Optional[OracleCounter] = None) -> SolveResult:
    """Proximal point in x without momentum, then a uniformly drawn iterate.

    Each step solves ``max_y f(x, y) + ell||x - x_{t-1}||^2`` approximately
    with the two-timescale solver; the iterate index ``s`` is drawn from
    ``numpy.random.default_rng(seed)`` and ``y_s`` is recovered by AGD.  The
    whole trajectory ``x_1 .. x_T`` is kept in ``report.extras``.
    """
    if seed is None:
        raise ValueError("minimax_ppa needs an explicit seed")
    prof = f.profile
    ell = prof.ell if ell is None else ell
    mu_y = prof.mu_y if mu_y is None else mu_y
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 1:
        raise ValueError("T must be at least 1")
    if not mu_y > 0:
        raise ValueError("minimax_ppa needs mu_y > 0")
    x0, y0 = _start(f, x0, y0)
    report = SolverReport()
    report.extras.update(mode=mode, seed=int(seed))
    diam_y = f.set_y.diameter() if prof.diam_y is None else prof.diam_y
    if diam_y is None:
        report.set_status(MISSING_DIAMETER)
        return SolveResult(x0.copy(), y0.copy(), report)

    ky = ell / mu_y
    _, p_stop = _exponents(mode)
    delta = report.clamp("ppa.delta",
                         eps ** 2 / ((10.0 * ky) ** p_stop * ell) * (eps / (ell * diam_y)) ** 2,
                         CLAMP_REL * eps)
    plan = plan_maximin(3.0 * ell, ell, mu_y, delta, diam_y, mode, report,
                        outer_cap, agd_cap, label="ppa.maximin")
    cnt = engine.new_counts()
    trajectory = []
    x_prev = x0
    for t in range(1, T + 1):
        x, _, _, status, outer, inner, floored = run_maximin(f, plan, x0, y0, cnt, ell, x_prev)
        report.set_status(status)
        report.note_fp_floor(floored)
        report.inner_iters += inner
        report.outer_iters = t
        if status == NUMERICAL_FAILURE:
            _finish(report, cnt, counter)
            return SolveResult(x, y0.copy(), report)
        trajectory.append(x)
        x_prev = x
    s = int(np.random.default_rng(seed).integers(1, T + 1))
    x_s = trajectory[s - 1]
    y_s, status, iters, floored = solve_partial(f, 1, x_s, y0, ell, mu_y, delta, cnt)
    report.set_status(status)
    report.note_fp_floor(floored)
    report.inner_iters += iters
    report.extras.update(s=s, delta=delta, trajectory=trajectory)
    _finish(report, cnt, counter)
    return SolveResult(x_s.copy(), y_s, report)


def suggest_T_ppa(ell: float, delta_phi_upper: float, eps: float) -> int:
    """ceil(8 ell dPhi / eps^2) + 1."""
    return math.ceil(8.0 * ell * delta_phi_upper / eps ** 2) + 1


def nc_solve(f: MinimaxProblem, x0, y0, ell: Optional[float] = None, eps: float = 1e-2,
             T: int = 1, seed: Optional[int] = None, **kw) -> SolveResult:
    """Nonconvex-concave problems: regularise y by eps/(4 D_y) and run the proximal driver."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ell = f.profile.ell if ell is None else ell
    fr, x0, y0, failed = _reduced_solve("nc", f, x0, y0, eps)
    if failed is not None:
        return SolveResult(x0, y0, failed)
    d = fr.profile.diam_y
    res = minimax_ppa(fr, x0, y0, ell, eps / (2.0 * d), eps / 2.0, T, seed, **kw)
    res.report.extras["reduction"] = "nc"
    return res


def nc_moreau_solve(f: MinimaxProblem, x0, y0, ell: Optional[float] = None, eps: float = 1e-2,
                    T: int = 1, seed: Optional[int] = None, **kw) -> SolveResult:
    """Nonconvex-concave problems measured by the Moreau envelope gradient."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ell = f.profile.ell if ell is None else ell
    fr, x0, y0, failed = _reduced_solve("nc_moreau", f, x0, y0, eps)
    if failed is not None:
        return SolveResult(x0, y0, failed)
    d = fr.profile.diam_y
    res = minimax_ppa(fr, x0, y0, ell, eps ** 2 / (100.0 * ell * d ** 2), eps / 10.0, T, seed, **kw)
    res.report.extras["reduction"] = "nc_moreau"
    return res
