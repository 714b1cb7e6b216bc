"""Optimality certificates and brute-force verification oracles.

Every certificate carries the inner tolerance it was computed at and an
explicit bound on its own error, so callers assert ``value <= target + error``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

import numpy as np
from scipy import optimize

from . import engine
from .agd import solve_partial
from .core import (Ball, Box, ConstraintSet, MinimaxProblem, Simplex, SolverReport,
                   WholeSpace, as_vector)
from .maximin_ag2 import plan_maximin, run_maximin


class UncertifiableError(RuntimeError):
    """No inner method applies to the requested certificate."""


@dataclass(frozen=True)
class Certificate:
    kind: str
    value: float
    inner_tol: float
    error: float
    method: str
    details: dict[str, Any] = field(default_factory=dict)

    def holds(self, target: float) -> bool:
        return self.value <= target + self.error


# ---------------------------------------------------------------------------
# duality gap


def _grid_points(constraint: ConstraintSet, n: int, bounds=None) -> np.ndarray:
    """Grid with ``n`` points per axis inside ``constraint``."""
    d = constraint.dim
    if isinstance(constraint, Simplex):
        if n == 1 or d == 1:
            return constraint.project(np.zeros(d))[None, :]
        k = n - 1
        pts = [np.array(c + (k - sum(c),)) / k
               for c in itertools.product(range(k + 1), repeat=d - 1) if sum(c) <= k]
        return np.array(pts, dtype=np.float64)
    if bounds is None:
        bounds = constraint.bounding_box()
    if bounds is None:
        raise UncertifiableError("grid over an unbounded set needs explicit bounds")
    lo, hi = (np.broadcast_to(np.asarray(v, dtype=np.float64), (d,)) for v in bounds)
    if n == 1:
        axes = [np.array([0.5 * (a + b)]) for a, b in zip(lo, hi)]
    else:
        axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    pts = np.array(list(itertools.product(*axes)), dtype=np.float64)
    if isinstance(constraint, Ball):
        pts = pts[[constraint.contains(q) for q in pts]]
    return pts


def _grid_spacing(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    span = points.max(axis=0) - points.min(axis=0)
    per_axis = round(len(points) ** (1.0 / points.shape[1]))
    return float(np.linalg.norm(span) / max(per_axis - 1, 1))


def _best_response(p: MinimaxProblem, fixed: np.ndarray, side: int, inner_tol: float,
                   grid_per_dim: int) -> tuple[float, float, str]:
    """max_y f(fixed, y) (side 1) or min_x f(x, fixed) (side 0) with error bound."""
    ref = p.reference
    closed = None if ref is None else (ref.phi if side == 1 else ref.psi)
    if closed is not None:
        return float(closed(fixed)), 0.0, "closed_form"
    prof = p.profile
    mu = prof.mu_y if side == 1 else prof.mu_x
    if mu > 0:
        cnt = engine.new_counts()
        start = p.set_y.project(np.zeros(p.dim_y)) if side == 1 else p.set_x.project(np.zeros(p.dim_x))
        z, status, _, _ = solve_partial(p, side, fixed, start, prof.ell, mu, inner_tol, cnt)
        if status != "ok":
            raise UncertifiableError(f"inner solve ended with status {status}")
        val = p.value(fixed, z) if side == 1 else p.value(z, fixed)
        return float(val), float(inner_tol), "inner_solver"
    constraint = p.set_y if side == 1 else p.set_x
    if constraint.dim > 3 or constraint.bounding_box() is None:
        raise UncertifiableError("no closed form, no strong curvature, and no grid for this set")
    pts = _grid_points(constraint, grid_per_dim)
    if side == 1:
        vals = np.array([p.value(fixed, q) for q in pts])
        k = int(np.argmax(vals))
        grads = np.array([np.linalg.norm(p.grad_y(fixed, q)) for q in pts])
    else:
        vals = np.array([p.value(q, fixed) for q in pts])
        k = int(np.argmin(vals))
        grads = np.array([np.linalg.norm(p.grad_x(q, fixed)) for q in pts])
    h = _grid_spacing(pts) * math.sqrt(constraint.dim) / 2.0
    G = float(grads.max()) + prof.ell * h
    return float(vals[k]), G * h + 0.5 * prof.ell * h * h, "grid"


def duality_gap(p: MinimaxProblem, x_hat, y_hat, inner_tol: float = 1e-10,
                grid_per_dim: int = 201) -> Certificate:
    """max_y f(x_hat, y) - min_x f(x, y_hat).

    Each inner problem uses a closed form when the problem reference has one,
    AGD when the relevant block is strongly concave/convex, and otherwise a
    dense grid on sets of dimension at most three.
    """
    x_hat = as_vector(x_hat, p.dim_x, "x_hat")
    y_hat = as_vector(y_hat, p.dim_y, "y_hat")
    upper, err_u, m_u = _best_response(p, x_hat, 1, inner_tol, grid_per_dim)
    lower, err_l, m_l = _best_response(p, y_hat, 0, inner_tol, grid_per_dim)
    method = m_u if m_u == m_l else f"{m_u}+{m_l}"
    return Certificate("duality_gap", upper - lower, inner_tol, err_u + err_l, method,
                       {"max_y": upper, "min_x": lower})


# ---------------------------------------------------------------------------
# stationarity


def stationarity_f(p: MinimaxProblem, x_hat, y_hat) -> tuple[float, float]:
    """Projected-gradient residuals (r_x, r_y) with step 1/ell, x evaluated at y+."""
    ell = p.profile.ell
    x_hat = as_vector(x_hat, p.dim_x, "x_hat")
    y_hat = as_vector(y_hat, p.dim_y, "y_hat")
    y_plus = p.set_y.project(y_hat + np.asarray(p.grad_y(x_hat, y_hat)) / ell)
    r_y = ell * float(np.linalg.norm(y_plus - y_hat))
    x_plus = p.set_x.project(x_hat - np.asarray(p.grad_x(x_hat, y_plus)) / ell)
    r_x = ell * float(np.linalg.norm(x_plus - x_hat))
    return r_x, r_y


def phi_grad_norm(p: MinimaxProblem, x_hat, inner_tol: float = 1e-12) -> Certificate:
    """||grad_x f(x_hat, y*(x_hat))|| for a strongly concave inner problem."""
    prof = p.profile
    if not prof.mu_y > 0:
        raise UncertifiableError("phi gradient needs a strongly concave inner problem")
    x_hat = as_vector(x_hat, p.dim_x, "x_hat")
    if p.reference is not None and p.reference.y_star is not None:
        y = np.asarray(p.reference.y_star(x_hat), dtype=np.float64)
        err, method = 0.0, "closed_form"
    else:
        cnt = engine.new_counts()
        y, status, _, _ = solve_partial(p, 1, x_hat, p.set_y.project(np.zeros(p.dim_y)),
                                        prof.ell, prof.mu_y, inner_tol, cnt)
        if status != "ok":
            raise UncertifiableError(f"inner solve ended with status {status}")
        err, method = prof.ell * math.sqrt(2.0 * inner_tol / prof.mu_y), "inner_solver"
    val = float(np.linalg.norm(p.grad_x(x_hat, y)))
    return Certificate("phi_grad", val, inner_tol, err, method, {"y_star": y})


# ---------------------------------------------------------------------------
# Moreau envelope


def _prox_1d(phi: Callable, x: float, ell: float, tol: float) -> float:
    obj = lambda w: phi(np.array([w])) + ell * (w - x) ** 2
    f0 = obj(x)
    h = 1.0
    # the objective is convex, so an interval whose ends both exceed the
    # centre value brackets the minimiser
    while obj(x - h) <= f0 or obj(x + h) <= f0:
        h *= 2.0
        if h > 1e12:
            raise UncertifiableError("could not bracket the proximal point")
    res = optimize.minimize_scalar(obj, bounds=(x - h, x + h), method="bounded",
                                   options={"xatol": tol, "maxiter": 10_000})
    w = float(res.x)
    # value comparisons locate a smooth minimum only to about sqrt(machine eps);
    # a few Newton steps on wide central differences recover full precision.
    # Near a kink the curvature estimate blows up and the step vanishes.
    for _ in range(3):
        s = 1e-4 * max(1.0, abs(w))
        lo, mid, hi = obj(w - s), obj(w), obj(w + s)
        curv = (lo - 2.0 * mid + hi) / (s * s)
        if not curv > 0:
            break
        step = (hi - lo) / (2.0 * s) / curv
        if abs(step) > 0.1 * s or obj(w - step) > mid + 1e-15 * (1.0 + abs(mid)):
            break
        w -= step
    return w


def _prox_point(phi, x_hat: np.ndarray, ell: float, inner_tol: float):
    """argmin_w phi(w) + ell||w - x_hat||^2 and the error bound on its location."""
    if isinstance(phi, MinimaxProblem):
        p = phi
        if p.reference is not None and p.reference.phi is not None:
            return _prox_point(p.reference.phi, x_hat, ell, inner_tol)
        if not p.profile.mu_y > 0 or p.set_y.diameter() is None:
            raise UncertifiableError("prox of the max-function needs a strongly concave, bounded y-block")
        report = SolverReport()
        plan = plan_maximin(3.0 * ell, ell, p.profile.mu_y, inner_tol, p.set_y.diameter(),
                            "practical", report)
        cnt = engine.new_counts()
        x, *_ = run_maximin(p, plan, x_hat, p.set_y.project(np.zeros(p.dim_y)), cnt, ell, x_hat)
        return x, math.sqrt(2.0 * inner_tol / ell), "inner_solver"
    if x_hat.size == 1:
        w = _prox_1d(phi, float(x_hat[0]), ell, inner_tol)
        return np.array([w]), inner_tol, "inner_solver"
    obj = lambda w: phi(w) + ell * float((w - x_hat) @ (w - x_hat))
    res = optimize.minimize(obj, x_hat, method="Nelder-Mead",
                            options={"xatol": inner_tol, "fatol": inner_tol ** 2, "maxiter": 200_000})
    return np.asarray(res.x, dtype=np.float64), inner_tol, "inner_solver"


def near_stationarity_witness(phi: Union[Callable, MinimaxProblem], x_hat, ell: float,
                              inner_tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """The proximal point of ``phi / (2 ell)`` at ``x_hat`` and its distance to ``x_hat``."""
    x_hat = as_vector(x_hat, name="x_hat")
    prox, _, _ = _prox_point(phi, x_hat, ell, inner_tol)
    return prox, float(np.linalg.norm(x_hat - prox))


def moreau_grad_norm(phi: Union[Callable, MinimaxProblem], x_hat, ell: float,
                     inner_tol: float = 1e-12) -> Certificate:
    """2 ell ||x_hat - prox(x_hat)||, the gradient norm of the Moreau envelope."""
    x_hat = as_vector(x_hat, name="x_hat")
    prox, loc_err, method = _prox_point(phi, x_hat, ell, inner_tol)
    dist = float(np.linalg.norm(x_hat - prox))
    return Certificate("moreau_grad", 2.0 * ell * dist, inner_tol, 2.0 * ell * loc_err, method,
                       {"prox": prox, "dist": dist})


def moreau_envelope(phi: Callable, x, ell: float, inner_tol: float = 1e-12) -> float:
    """min_w phi(w) + ell||w - x||^2."""
    x = as_vector(x, name="x")
    w, _, _ = _prox_point(phi, x, ell, inner_tol)
    return float(phi(w) + ell * (w - x) @ (w - x))


# ---------------------------------------------------------------------------
# brute force


@dataclass(frozen=True)
class GridSaddle:
    x: np.ndarray
    y: np.ndarray
    value: float
    accuracy: float


def brute_force_saddle(p: MinimaxProblem, grid_per_dim: int, bounds_x=None,
                       bounds_y=None) -> GridSaddle:
    """Dense-grid min-max for problems with total dimension at most four.

    Unbounded sets are boxed to +-10 around the reference saddle (or the
    origin) unless bounds are given.  ``accuracy`` is ell times the grid
    spacing.
    """
    if p.dim_x + p.dim_y > 4:
        raise ValueError("grid search supports total dimension at most 4")
    if grid_per_dim < 1:
        raise ValueError("grid_per_dim must be positive")

    def default_bounds(constraint, centre):
        if constraint.bounding_box() is not None:
            return None
        c = np.zeros(constraint.dim) if centre is None else centre
        return c - 10.0, c + 10.0

    ref = p.reference
    bx = bounds_x if bounds_x is not None else default_bounds(p.set_x, None if ref is None else ref.saddle_x)
    by = bounds_y if bounds_y is not None else default_bounds(p.set_y, None if ref is None else ref.saddle_y)
    X = _grid_points(p.set_x, grid_per_dim, bx)
    Y = _grid_points(p.set_y, grid_per_dim, by)
    F = np.array([[p.value(x, y) for y in Y] for x in X])
    i = int(np.argmin(F.max(axis=1)))
    j = int(np.argmax(F.min(axis=0)))
    spacing = max(_grid_spacing(X), _grid_spacing(Y))
    return GridSaddle(X[i].copy(), Y[j].copy(), float(F.max(axis=1)[i]), p.profile.ell * spacing)
