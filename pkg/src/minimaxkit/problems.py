"""Parametric test problems with exact constants and closed-form references."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np
from scipy import optimize

from .core import (Ball, Box, ConstraintSet, MinimaxProblem, Reference, Simplex,
                   SmoothnessProfile, WholeSpace, structured_kernel)

FAMILIES = ("quadratic_scsc", "bilinear_simplex", "scc_bilinear", "nc_sc_sin", "nc_c_toy")


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    dim_x: int = 1
    dim_y: int = 1
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        def plain(v):
            return v.tolist() if isinstance(v, np.ndarray) else v
        return {"family": self.family, "dim_x": self.dim_x, "dim_y": self.dim_y,
                "params": {k: plain(v) for k, v in self.params.items()}, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProblemSpec":
        allowed = {"family", "dim_x", "dim_y", "params", "seed"}
        extra = set(data) - allowed
        if extra:
            raise ValueError(f"unknown problem keys: {sorted(extra)}")
        if "family" not in data:
            raise ValueError("problem.family is required")
        return cls(family=data["family"], dim_x=int(data.get("dim_x", 1)),
                   dim_y=int(data.get("dim_y", 1)), params=dict(data.get("params", {})),
                   seed=int(data.get("seed", 0)))


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def hessian_norm(P, A, Q) -> float:
    """Spectral norm of the full Hessian [[P, A], [A', -Q]] of the quadratic part."""
    H = np.block([[P, A], [A.T, -Q]])
    return spectral_norm(H)


def default_start(problem: MinimaxProblem) -> tuple[np.ndarray, np.ndarray]:
    """Projection of the origin onto each set (uniform point on a simplex)."""
    return (problem.set_x.project(np.zeros(problem.dim_x)),
            problem.set_y.project(np.zeros(problem.dim_y)))


def _matrix(value, shape, name) -> np.ndarray:
    M = np.array(value, dtype=np.float64, ndmin=2)
    if M.shape != shape:
        raise ValueError(f"{name} has shape {M.shape}, expected {shape}")
    return M


def _vector(value, n, name) -> np.ndarray:
    v = np.array(value, dtype=np.float64, ndmin=1)
    if v.shape != (n,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
    return v


def _random_spd(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    """Symmetric matrix with spectrum in [lo, hi] and smallest eigenvalue exactly lo."""
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(lo, hi, size=n)
    lam[0] = lo
    M = (U * lam) @ U.T
    return 0.5 * (M + M.T)


def _set_from_param(kind: Optional[str], radius: Optional[float], dim: int,
                    default: ConstraintSet) -> ConstraintSet:
    if kind is None:
        return default
    if kind == "whole":
        return WholeSpace(dim)
    if kind == "ball":
        return Ball(np.zeros(dim), float(radius))
    if kind == "box":
        return Box.symmetric(float(radius), dim)
    raise ValueError(f"unknown set kind {kind!r}")


def _profile(ell, mu_x, mu_y, sx: ConstraintSet, sy: ConstraintSet) -> SmoothnessProfile:
    return SmoothnessProfile(ell=ell, mu_x=mu_x, mu_y=mu_y, diam_x=sx.diameter(), diam_y=sy.diameter())


def quadratic_problem(P, A, Q, b, c, set_x: ConstraintSet, set_y: ConstraintSet,
                      name: str = "quadratic_scsc") -> MinimaxProblem:
    """f(x, y) = 1/2 x'Px + x'Ay - 1/2 y'Qy + b'x + c'y with P, Q positive definite."""
    P, A, Q = (np.asarray(M, dtype=np.float64) for M in (P, A, Q))
    b, c = np.asarray(b, dtype=np.float64), np.asarray(c, dtype=np.float64)
    mu_x = float(np.linalg.eigvalsh(P)[0])
    mu_y = float(np.linalg.eigvalsh(Q)[0])
    if mu_x <= 0 or mu_y <= 0:
        raise ValueError("P and Q must be positive definite")
    ell = hessian_norm(P, A, Q)

    def value(x, y):
        return float(0.5 * x @ P @ x + x @ A @ y - 0.5 * y @ Q @ y + b @ x + c @ y)

    def grad_x(x, y):
        return P @ x + A @ y + b

    def grad_y(x, y):
        return A.T @ x - Q @ y + c

    m, n = A.shape
    K = np.block([[P, A], [A.T, -Q]])
    sol = np.linalg.solve(K, -np.concatenate([b, c]))
    xs, ys = sol[:m], sol[m:]
    # closed forms below ignore the constraint sets; they are exact whenever
    # the relevant maximiser or minimiser is interior
    y_star = lambda x: np.linalg.solve(Q, A.T @ x + c)
    x_star = lambda y: np.linalg.solve(P, -(A @ y + b))
    ref = Reference(
        saddle_x=xs if set_x.contains(xs) else None,
        saddle_y=ys if set_y.contains(ys) else None,
        phi=(lambda x: value(x, y_star(x))) if isinstance(set_y, WholeSpace) else None,
        psi=(lambda y: value(x_star(y), y)) if isinstance(set_x, WholeSpace) else None,
        y_star=y_star if isinstance(set_y, WholeSpace) else None,
        x_star=x_star if isinstance(set_x, WholeSpace) else None,
    )
    return MinimaxProblem(value, grad_x, grad_y, set_x, set_y,
                          _profile(ell, mu_x, mu_y, set_x, set_y), ref,
                          structured_kernel(P, A, Q, b, c), name)


def _diagonal_quadratic(spec: ProblemSpec) -> MinimaxProblem:
    p = spec.params
    d = spec.dim_x
    if spec.dim_y != d or d < 2:
        raise ValueError("diagonal sweep instances need dim_x == dim_y >= 2")
    ell = float(p.get("ell", 1.0))
    kx, ky = float(p["kappa_x"]), float(p["kappa_y"])
    if kx < 1 or ky < 1:
        raise ValueError("condition numbers must be at least 1")
    mu_x, mu_y = ell / kx, ell / ky
    P = np.diag(np.linspace(mu_x, ell, d))
    Q = np.diag(np.linspace(mu_y, ell, d))
    A = np.zeros((d, d))
    alpha = math.sqrt(mu_x * mu_y)
    block = np.array([[mu_x, alpha], [alpha, -mu_y]])
    if spectral_norm(block) <= ell:
        A[0, 0] = alpha
    x_t = np.full(d, float(p.get("x_target", 1.0)))
    y_t = np.full(d, float(p.get("y_target", 0.5)))
    b = -(P @ x_t + A @ y_t)
    c = -(A.T @ x_t - Q @ y_t)
    radius = float(p.get("radius_y", 2.0 * np.linalg.norm(y_t) + 1.0))
    set_x = _set_from_param(p.get("set_x"), p.get("radius_x"), d, WholeSpace(d))
    set_y = Ball(np.zeros(d), radius)
    prob = quadratic_problem(P, A, Q, b, c, set_x, set_y)
    # pin the requested constants exactly (the construction realises them)
    return prob.with_profile(ell=ell, mu_x=mu_x, mu_y=mu_y)


def _quadratic_scsc(spec: ProblemSpec) -> MinimaxProblem:
    p = spec.params
    m, n = spec.dim_x, spec.dim_y
    if p.get("diagonal"):
        return _diagonal_quadratic(spec)
    if "P" in p:
        P = _matrix(p["P"], (m, m), "P")
        A = _matrix(p["A"], (m, n), "A")
        Q = _matrix(p["Q"], (n, n), "Q")
        b = _vector(p.get("b", np.zeros(m)), m, "b")
        c = _vector(p.get("c", np.zeros(n)), n, "c")
        if not (np.allclose(P, P.T) and np.allclose(Q, Q.T)):
            raise ValueError("P and Q must be symmetric")
    else:
        rng = np.random.default_rng(spec.seed)
        coupling = float(p.get("coupling", 0.5))
        # ell <= 1 + coupling, so these moduli keep kappa at or below the targets
        top = 1.0 + coupling
        P = _random_spd(rng, m, top / float(p.get("kappa_x", 10.0)), 1.0)
        Q = _random_spd(rng, n, top / float(p.get("kappa_y", 10.0)), 1.0)
        G = rng.standard_normal((m, n))
        A = coupling * G / spectral_norm(G)
        b = rng.standard_normal(m)
        c = rng.standard_normal(n)
    K = np.block([[P, A], [A.T, -Q]])
    sol = np.linalg.solve(K, -np.concatenate([b, c]))
    ys = sol[m:]
    default_radius = 2.0 * float(np.linalg.norm(ys)) + 1.0
    set_x = _set_from_param(p.get("set_x"), p.get("radius_x"), m, WholeSpace(m))
    set_y = _set_from_param(p.get("set_y", "ball"), p.get("radius_y", default_radius), n, WholeSpace(n))
    return quadratic_problem(P, A, Q, b, c, set_x, set_y)


def _lp_saddle(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Mixed equilibrium of min_x max_y x'Ay over simplices via two LPs."""
    m, n = A.shape
    # x player: min v s.t. A'x <= v, sum x = 1, x >= 0
    res_x = optimize.linprog(np.r_[np.zeros(m), 1.0],
                             A_ub=np.c_[A.T, -np.ones(n)], b_ub=np.zeros(n),
                             A_eq=np.r_[np.ones(m), 0.0][None, :], b_eq=[1.0],
                             bounds=[(0, None)] * m + [(None, None)], method="highs")
    res_y = optimize.linprog(np.r_[np.zeros(n), -1.0],
                             A_ub=np.c_[-A, np.ones(m)], b_ub=np.zeros(m),
                             A_eq=np.r_[np.ones(n), 0.0][None, :], b_eq=[1.0],
                             bounds=[(0, None)] * n + [(None, None)], method="highs")
    return res_x.x[:m], res_y.x[:n], float(res_x.x[m])


def _bilinear_simplex(spec: ProblemSpec) -> MinimaxProblem:
    m, n = spec.dim_x, spec.dim_y
    if "A" in spec.params:
        A = _matrix(spec.params["A"], (m, n), "A")
    else:
        A = np.random.default_rng(spec.seed).uniform(-1.0, 1.0, size=(m, n))

    def value(x, y):
        return float(x @ A @ y)

    def grad_x(x, y):
        return A @ y

    def grad_y(x, y):
        return A.T @ x

    xs, ys, _ = _lp_saddle(A)
    sx, sy = Simplex(m), Simplex(n)
    ref = Reference(saddle_x=sx.project(xs), saddle_y=sy.project(ys),
                    phi=lambda x: float(np.max(A.T @ x)), psi=lambda y: float(np.min(A @ y)))
    kern = structured_kernel(np.zeros((m, m)), A, np.zeros((n, n)), np.zeros(m), np.zeros(n))
    return MinimaxProblem(value, grad_x, grad_y, sx, sy, _profile(spectral_norm(A), 0.0, 0.0, sx, sy),
                          ref, kern, "bilinear_simplex")


def _ball_max_concave_quadratic(M: np.ndarray, g: np.ndarray, radius: float) -> np.ndarray:
    """argmax over ||y|| <= radius of -1/2 y'My + g'y for M positive semidefinite."""
    lam, V = np.linalg.eigh(M)
    lam = np.maximum(lam, 0.0)
    gt = V.T @ g
    if np.linalg.norm(g) == 0.0:
        return np.zeros_like(g)

    def norm_at(s):
        return float(np.linalg.norm(gt / (lam + s)))

    if lam[0] > 0 and norm_at(0.0) <= radius:
        return V @ (gt / lam)
    hi = np.linalg.norm(g) / radius + 1.0
    s = optimize.brentq(lambda s: norm_at(s) - radius, 1e-300 if lam[0] > 0 else 1e-14, hi,
                        xtol=1e-15, rtol=1e-15, maxiter=500)
    return V @ (gt / (lam + s))


def _scc_bilinear(spec: ProblemSpec) -> MinimaxProblem:
    p = spec.params
    m, n = spec.dim_x, spec.dim_y
    mu = float(p.get("mu_x", 1.0))
    D = float(p.get("D", 2.0))
    if "A" in p:
        A = _matrix(p["A"], (m, n), "A")
    else:
        A = np.random.default_rng(spec.seed).standard_normal((m, n))
    b = _vector(p.get("b", np.zeros(m)), m, "b")
    R = D / 2.0

    def value(x, y):
        d = x - b
        return float(0.5 * mu * d @ d + x @ A @ y)

    def grad_x(x, y):
        return mu * (x - b) + A @ y

    def grad_y(x, y):
        return A.T @ x

    def phi(x):
        d = x - b
        return float(0.5 * mu * d @ d + R * np.linalg.norm(A.T @ x))

    def psi(y):
        Ay = A @ y
        return float(-Ay @ Ay / (2.0 * mu) + b @ Ay)

    def y_star(x):
        v = A.T @ x
        nv = np.linalg.norm(v)
        return v * (R / nv) if nv > 0 else np.zeros(n)

    ys = _ball_max_concave_quadratic(A.T @ A / mu, A.T @ b, R)
    xs = b - A @ ys / mu
    sx, sy = WholeSpace(m), Ball(np.zeros(n), R)
    ell = hessian_norm(mu * np.eye(m), A, np.zeros((n, n)))
    ref = Reference(saddle_x=xs, saddle_y=ys, phi=phi, psi=psi, y_star=y_star,
                    x_star=lambda y: b - A @ y / mu)
    kern = structured_kernel(mu * np.eye(m), A, np.zeros((n, n)), -mu * b, np.zeros(n))
    return MinimaxProblem(value, grad_x, grad_y, sx, sy, _profile(ell, mu, 0.0, sx, sy), ref, kern,
                          "scc_bilinear")


def sin_coupling_ell(mu_y: float) -> float:
    """Smoothness of sin(x) + x y - mu_y/2 y^2: worst Hessian [[s, 1], [1, -mu_y]], |s| <= 1."""
    return max(spectral_norm(np.array([[s, 1.0], [1.0, -mu_y]])) for s in (-1.0, 1.0))


def _sin_family(spec: ProblemSpec, concave_only: bool) -> MinimaxProblem:
    p = spec.params
    m = spec.dim_x
    if spec.dim_y != m:
        raise ValueError("sin families need dim_y == dim_x")
    r = float(p.get("r", 1.0))
    mu_y = 0.0 if concave_only else float(p.get("mu_y", 1.0))
    if not concave_only and mu_y <= 0:
        raise ValueError("nc_sc_sin needs mu_y > 0")

    def value(x, y):
        return float(np.sum(np.sin(x)) + x @ y - 0.5 * mu_y * y @ y)

    def grad_x(x, y):
        return np.cos(x) + y

    def grad_y(x, y):
        return x - mu_y * y

    if concave_only:
        def y_star(x):
            return r * np.sign(x)
    else:
        def y_star(x):
            return np.clip(x / mu_y, -r, r)

    def phi(x):
        return value(x, y_star(x))

    sx, sy = WholeSpace(m), Box.symmetric(r, m)
    ell = sin_coupling_ell(mu_y)
    I = np.eye(m)
    kern = structured_kernel(np.zeros((m, m)), I, mu_y * I, np.zeros(m), np.zeros(m), w=np.ones(m))
    family = "nc_c_toy" if concave_only else "nc_sc_sin"
    ref = Reference(phi=phi, y_star=y_star)
    return MinimaxProblem(value, grad_x, grad_y, sx, sy, _profile(ell, 0.0, mu_y, sx, sy), ref, kern, family)


def make(spec: ProblemSpec) -> MinimaxProblem:
    """Build the problem described by ``spec``."""
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}; expected one of {FAMILIES}")
    if spec.dim_x < 1 or spec.dim_y < 1:
        raise ValueError("dimensions must be positive")
    if spec.family == "quadratic_scsc":
        return _quadratic_scsc(spec)
    if spec.family == "bilinear_simplex":
        return _bilinear_simplex(spec)
    if spec.family == "scc_bilinear":
        return _scc_bilinear(spec)
    return _sin_family(spec, concave_only=spec.family == "nc_c_toy")


def condition_sweep(family: str, kappa_values: Iterable[tuple[float, float]],
                    fixed_params: Optional[dict[str, Any]] = None) -> list[ProblemSpec]:
    """Diagonal quadratic instances realising each ``(kappa_x, kappa_y)`` exactly."""
    if family != "quadratic_scsc":
        raise ValueError("condition sweeps are defined for quadratic_scsc only")
    fixed = dict(fixed_params or {})
    dim = int(fixed.pop("dim", 2))
    seed = int(fixed.pop("seed", 0))
    specs = []
    for kx, ky in kappa_values:
        params = dict(fixed, diagonal=True, kappa_x=float(kx), kappa_y=float(ky))
        specs.append(ProblemSpec(family, dim, dim, params, seed))
    return specs
