"""Fixed-point based general iterations and the accelerated drivers built on them.

``g1`` approximately solves the proximal minimax step
``min_x max_y f(x, y) + ell||x - x_bar||^2``: the inner minimisation is the
fixed point of the 1/2-contraction ``T_z(x) = P_X(x_bar - grad_x f(x, z)/(2 ell))``
and the outer loop is accelerated projected ascent in ``y``.  ``g2`` is plain
Nesterov ascent on ``y -> f(x, y)``.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from . import engine
from .core import (MISSING_DIAMETER, NUMERICAL_FAILURE, MinimaxProblem, OracleCounter,
                   SolveResult, SolverReport, add_quadratic_regularizer, as_vector,
                   status_from_code)
from .maximin_ag2 import CLAMP_REL


class IterationResult(NamedTuple):
    point: np.ndarray
    report: SolverReport


def _diameter(f: MinimaxProblem) -> Optional[float]:
    return f.set_y.diameter() if f.profile.diam_y is None else f.profile.diam_y


def _default_y0(f: MinimaxProblem, y0) -> np.ndarray:
    if y0 is None:
        return f.set_y.project(np.zeros(f.dim_y))
    return as_vector(y0, f.dim_y, "y0")


def _outer_cap(kappa_bar: float, ell: float, diam: float, tol: float) -> int:
    return math.ceil(20.0 * math.sqrt(kappa_bar) * math.log(ell * diam ** 2 / tol + math.e))


def _distance_floor(tol: float, ell: float) -> float:
    # squared-threshold floor CLAMP_REL * tol / ell, expressed as a distance
    return math.sqrt(CLAMP_REL * tol / ell)


def smooth_y(f: MinimaxProblem, eta: float, y0) -> MinimaxProblem:
    """``f - eta/(2 D^2) ||y - y0||^2``: adds ``eta / D^2`` of strong concavity."""
    diam = _diameter(f)
    if diam is None:
        raise ValueError("smoothing needs a bounded y-set")
    if not eta > 0:
        raise ValueError("eta must be positive")
    return add_quadratic_regularizer(f.with_profile(diam_y=diam), 0.0, np.zeros(f.dim_x),
                                     eta / (2.0 * diam ** 2), y0, f"{f.name}+smooth")


def contraction_map(f: MinimaxProblem, x_bar, z, x) -> np.ndarray:
    """``T_z(x) = P_X(x_bar - grad_x f(x, z) / (2 ell))``."""
    g = np.asarray(f.grad_x(as_vector(x, f.dim_x), as_vector(z, f.dim_y)), dtype=np.float64)
    return f.set_x.project(as_vector(x_bar, f.dim_x) - g / (2.0 * f.profile.ell))


def _g1(f: MinimaxProblem, x_bar: np.ndarray, x0: np.ndarray, y0: np.ndarray, eps_bar: float,
        report: SolverReport, cnt: np.ndarray, outer_cap: Optional[int], label: str):
    prof = f.profile
    ell, mu_bar = prof.ell, prof.mu_y
    diam = _diameter(f)
    kb = ell / mu_bar
    floor = _distance_floor(eps_bar, ell)
    base = math.sqrt(eps_bar / (2.0 * kb * ell))
    # a singleton y-set sends the bound to its cap of 1
    first = 1.0 if diam == 0 else min(1.0, eps_bar / (5971968.0 * kb ** 4.5 * ell * diam))
    tol_first = report.clamp(f"{label}.tol_first", first, floor)
    tol_second = report.clamp(f"{label}.tol_second", base / (36.0 * kb), floor)
    tol_stop = report.clamp(f"{label}.tol_stop", base / (48.0 * kb), floor)
    if outer_cap is None:
        outer_cap = _outer_cap(kb, ell, diam, eps_bar)
    loops, data = engine.loops_for(f)
    x, y, code, outer, inner, floored = loops.g1_loop(
        data, f.set_x.packed, f.set_y.packed, x_bar, x0, y0, ell, mu_bar,
        tol_first, tol_second, tol_stop, int(outer_cap), cnt)
    report.set_status(status_from_code(code))
    report.note_fp_floor(bool(floored))
    report.outer_iters += int(outer)
    report.inner_iters += int(inner)
    return np.array(x, dtype=np.float64), np.array(y, dtype=np.float64)


def _g2(f: MinimaxProblem, x_tilde: np.ndarray, y0: np.ndarray, eps_tilde: float,
        report: SolverReport, cnt: np.ndarray, outer_cap: Optional[int], label: str):
    prof = f.profile
    ell, mu_bar = prof.ell, prof.mu_y
    kb = ell / mu_bar
    tol = report.clamp(f"{label}.tol_stop", math.sqrt(eps_tilde / (2.0 * ell)) / kb,
                       _distance_floor(eps_tilde, ell))
    if outer_cap is None:
        outer_cap = _outer_cap(kb, ell, _diameter(f), eps_tilde)
    loops, data = engine.loops_for(f)
    y, code, iters, floored = loops.g2_loop(data, f.set_y.packed, x_tilde, y0, ell, mu_bar, tol,
                                            int(outer_cap), cnt)
    report.set_status(status_from_code(code))
    report.note_fp_floor(bool(floored))
    report.inner_iters += int(iters)
    return np.array(y, dtype=np.float64)


def _check(f: MinimaxProblem, report: SolverReport) -> bool:
    if not f.profile.mu_y > 0:
        raise ValueError("general iterations need a strongly concave y-block")
    if _diameter(f) is None:
        report.set_status(MISSING_DIAMETER)
        return False
    return True


def _finish(report: SolverReport, cnt: np.ndarray, counter: Optional[OracleCounter]) -> None:
    report.counter.add_counts(cnt)
    if counter is not None:
        counter.add_counts(cnt)


def g1(f: MinimaxProblem, x_bar, x0, eps_bar: float, *, y0=None, outer_cap: Optional[int] = None,
       counter: Optional[OracleCounter] = None) -> IterationResult:
    """Approximate ``argmin_x max_y f(x, y) + ell||x - x_bar||^2`` to accuracy ``eps_bar``.

    The final ascent iterate is kept in ``report.extras["y"]``.
    """
    if not eps_bar > 0:
        raise ValueError("eps_bar must be positive")
    x_bar = as_vector(x_bar, f.dim_x, "x_bar")
    x0 = as_vector(x0, f.dim_x, "x0")
    report = SolverReport()
    if not _check(f, report):
        return IterationResult(x0.copy(), report)
    cnt = engine.new_counts()
    x, y = _g1(f, x_bar, x0, _default_y0(f, y0), eps_bar, report, cnt, outer_cap, "g1")
    report.extras["y"] = y
    _finish(report, cnt, counter)
    return IterationResult(x, report)


def g2(f: MinimaxProblem, x_tilde, eps_tilde: float, *, y0=None, outer_cap: Optional[int] = None,
       counter: Optional[OracleCounter] = None) -> IterationResult:
    """Approximate ``argmax_y f(x_tilde, y)`` to accuracy ``eps_tilde`` in value."""
    if not eps_tilde > 0:
        raise ValueError("eps_tilde must be positive")
    x_tilde = as_vector(x_tilde, f.dim_x, "x_tilde")
    report = SolverReport()
    y0 = _default_y0(f, y0)
    if not _check(f, report):
        return IterationResult(y0, report)
    cnt = engine.new_counts()
    y = _g2(f, x_tilde, y0, eps_tilde, report, cnt, outer_cap, "g2")
    _finish(report, cnt, counter)
    return IterationResult(y, report)


def _accelerated_prox(f: MinimaxProblem, x0, y0, T: int, eps_bar: float, eps_tilde: float,
                      kappa: float, counter: Optional[OracleCounter], report: SolverReport,
                      outer_cap: Optional[int]) -> SolveResult:
    """Shared loop of the two near-optimal drivers; ``kappa`` sets the momentum."""
    cnt = engine.new_counts()
    sk = math.sqrt(kappa)
    mom = (2.0 * sk - 1.0) / (2.0 * sk + 1.0)
    corr = 1.0 / (2.0 * sk + 4.0 * kappa)
    report.extras.update(momentum=mom, correction=corr)
    x_prev = x0
    x_tilde = x0
    y = y0
    for t in range(T + 1):
        x, _ = _g1(f, x_tilde, x0, y0, eps_bar, report, cnt, outer_cap, "g1")
        x_tilde = x + mom * (x - x_prev) + corr * (x - x_tilde)
        x_prev = x
        y = _g2(f, x, y0, eps_tilde, report, cnt, outer_cap, "g2")
        if report.status == NUMERICAL_FAILURE:
            break
    report.extras["driver_iters"] = t + 1
    _finish(report, cnt, counter)
    return SolveResult(x_prev.copy(), y, report)


def _dedupe_tolerances(report: SolverReport) -> None:
    seen = {}
    for rec in report.tolerances:
        seen.setdefault(rec.name, rec)
    report.tolerances = list(seen.values())


def scsc_near_optimal(f: MinimaxProblem, x0, eps: float, T: int, *, y0=None,
                      outer_cap: Optional[int] = None,
                      counter: Optional[OracleCounter] = None) -> SolveResult:
    """Accelerated proximal point on ``x`` with ``g1`` steps, for strongly convex-concave ``f``.

    Uses ``eps_bar = eps ell / (576 kappa^(5/2) kappa_bar^3)`` for the proximal
    steps and ``eps_tilde = eps ell / (8 kappa_bar)`` for the ``y`` recovery.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    prof = f.profile
    if not (prof.mu_x > 0 and prof.mu_y > 0):
        raise ValueError("scsc_near_optimal needs mu_x > 0 and mu_y > 0")
    x0 = as_vector(x0, f.dim_x, "x0")
    y0 = _default_y0(f, y0)
    report = SolverReport()
    if not _check(f, report):
        return SolveResult(x0.copy(), y0, report)
    k, kb = prof.ell / prof.mu_x, prof.ell / prof.mu_y
    eps_bar = report.clamp("eps_bar", eps * prof.ell / (576.0 * k ** 2.5 * kb ** 3), CLAMP_REL * eps)
    eps_tilde = report.clamp("eps_tilde", eps * prof.ell / (8.0 * kb), CLAMP_REL * eps)
    res = _accelerated_prox(f, x0, y0, T, eps_bar, eps_tilde, k, counter, report, outer_cap)
    _dedupe_tolerances(report)
    return res


def scc_tolerances(eps: float, kappa: float, ell: float, diam: float) -> tuple[float, float]:
    """Unclamped ``(eps_bar, eps_tilde)`` of the strongly-convex-concave driver."""
    scale = ell * diam ** 2
    m = min(1.0 / kappa, eps / scale)
    return eps ** 4 / (73328.0 * kappa ** 2.5 * scale ** 3) * m, eps ** 2 / (64.0 * scale) * m


def scc_near_optimal(f: MinimaxProblem, x0, y0, eps: float, T: int, *, eta="eps_bar",
                     outer_cap: Optional[int] = None,
                     counter: Optional[OracleCounter] = None) -> SolveResult:
    """Strongly-convex-concave variant: run on ``f - eta/(2 D^2)||y - y0||^2``.

    ``eta`` is ``"eps_bar"`` (default), ``"eps"`` for the literal reading of
    the smoothing parameter, or a positive number.  Momentum uses ``2 kappa``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    prof = f.profile
    if not prof.mu_x > 0:
        raise ValueError("scc_near_optimal needs mu_x > 0")
    x0 = as_vector(x0, f.dim_x, "x0")
    y0 = as_vector(y0, f.dim_y, "y0")
    report = SolverReport()
    diam = _diameter(f)
    if diam is None:
        report.set_status(MISSING_DIAMETER)
        return SolveResult(x0.copy(), y0.copy(), report)
    k = prof.ell / prof.mu_x
    bar, tilde = scc_tolerances(eps, k, prof.ell, diam)
    eps_bar = report.clamp("eps_bar", bar, CLAMP_REL * eps)
    eps_tilde = report.clamp("eps_tilde", tilde, CLAMP_REL * eps)
    if eta == "eps_bar":
        eta_value = eps_bar
    elif eta == "eps":
        eta_value = eps
    else:
        eta_value = float(eta)
    report.extras["eta"] = {"choice": eta if isinstance(eta, str) else "value", "value": eta_value}
    fe = smooth_y(f, eta_value, y0)
    res = _accelerated_prox(fe, x0, y0, T, eps_bar, eps_tilde, 2.0 * k, counter, report, outer_cap)
    _dedupe_tolerances(report)
    return res


def _uniform_index(seed: int, low: int, high: int) -> int:
    """Uniform integer in ``[low, high]`` from the seeded default generator."""
    return int(np.random.default_rng(seed).integers(low, high + 1))


def nsc_accelerated(f: MinimaxProblem, x0, eps: float, T: int, seed: Optional[int], *, y0=None,
                    outer_cap: Optional[int] = None,
                    counter: Optional[OracleCounter] = None) -> SolveResult:
    """Proximal point with ``g1`` steps for nonconvex-strongly-concave ``f``.

    Runs ``x_{t+1} = g1(f, x_t, x0, eps^2/(144 kappa_bar^2 ell))`` for
    ``t = 0..T`` and returns a uniformly drawn ``x_s`` with ``s`` in ``0..T-1``.
    """
    if seed is None:
        raise ValueError("nsc_accelerated needs an explicit seed")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 1:
        raise ValueError("T must be at least 1")
    x0 = as_vector(x0, f.dim_x, "x0")
    y0 = _default_y0(f, y0)
    report = SolverReport()
    report.extras["seed"] = int(seed)
    if not _check(f, report):
        return SolveResult(x0.copy(), None, report)
    prof = f.profile
    kb = prof.ell / prof.mu_y
    eps_bar = report.clamp("eps_bar", eps ** 2 / (144.0 * kb ** 2 * prof.ell), CLAMP_REL * eps)
    cnt = engine.new_counts()
    traj = [x0.copy()]
    for t in range(T + 1):
        x, _ = _g1(f, traj[-1], x0, y0, eps_bar, report, cnt, outer_cap, "g1")
        traj.append(x)
        if report.status == NUMERICAL_FAILURE:
            break
    _dedupe_tolerances(report)
    s = _uniform_index(seed, 0, min(T - 1, len(traj) - 1))
    report.extras.update(s=s, trajectory=traj)
    _finish(report, cnt, counter)
    return SolveResult(traj[s].copy(), None, report)


def nc_accelerated(f: MinimaxProblem, x0, y0, eps: float, T: int, seed: Optional[int], *,
                   outer_cap: Optional[int] = None,
                   counter: Optional[OracleCounter] = None) -> SolveResult:
    """Nonconvex-concave variant measured by the Moreau envelope gradient.

    With ``eps_bar = eps^2/(48 ell)`` runs ``x_{t+1} = g1(f_eps_bar, x_t, x0, eps_bar/2)``
    on the smoothed function and returns ``x_s`` with ``s`` uniform in ``1..T+1``.
    """
    if seed is None:
        raise ValueError("nc_accelerated needs an explicit seed")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    x0 = as_vector(x0, f.dim_x, "x0")
    y0 = as_vector(y0, f.dim_y, "y0")
    report = SolverReport()
    report.extras["seed"] = int(seed)
    if _diameter(f) is None:
        report.set_status(MISSING_DIAMETER)
        return SolveResult(x0.copy(), None, report)
    eps_bar = report.clamp("eps_bar", eps ** 2 / (48.0 * f.profile.ell), CLAMP_REL * eps)
    report.extras["eta"] = {"choice": "eps_bar", "value": eps_bar}
    fe = smooth_y(f, eps_bar, y0)
    cnt = engine.new_counts()
    traj = [x0.copy()]
    for t in range(T + 1):
        x, _ = _g1(fe, traj[-1], x0, y0, eps_bar / 2.0, report, cnt, outer_cap, "g1")
        traj.append(x)
        if report.status == NUMERICAL_FAILURE:
            break
    _dedupe_tolerances(report)
    s = _uniform_index(seed, 1, len(traj) - 1)
    report.extras.update(s=s, trajectory=traj)
    _finish(report, cnt, counter)
    return SolveResult(traj[s].copy(), None, report)
