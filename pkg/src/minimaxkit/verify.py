"""Built-in invariant suites, shared by the CLI ``verify`` command and the tests.

Each suite returns a list of :class:`PropertyResult`; a suite passes when
every property does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import engine
from .core import Ball, Box, Simplex, WholeSpace
from .drivers import ReductionSpec, cc_solve, reduce, scc_solve
from .general_iteration import contraction_map
from .metrics import duality_gap, moreau_envelope, moreau_grad_norm, near_stationarity_witness
from .problems import ProblemSpec, make


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f" ({self.detail})" if self.detail else "")


def _result(name: str, worst: float, bound: float, what: str = "worst excess") -> PropertyResult:
    return PropertyResult(name, bool(worst <= bound), f"{what} {worst:.3g}")


# ---------------------------------------------------------------------------
# contraction


def contraction_problems() -> list:
    """Ten problems with various curvature, including nonconvex ones."""
    out = []
    for i, (d, kx, ky) in enumerate([(1, 2, 2), (2, 10, 10), (3, 100, 5), (4, 5, 100), (5, 30, 30),
                                     (2, 1000, 10)]):
        out.append(make(ProblemSpec("quadratic_scsc", d, d, {"kappa_x": kx, "kappa_y": ky}, 10 + i)))
    out.append(make(ProblemSpec("nc_sc_sin", 1, 1, {"mu_y": 2.0}, 0)))
    out.append(make(ProblemSpec("nc_sc_sin", 3, 3, {"mu_y": 0.5}, 0)))
    out.append(make(ProblemSpec("nc_c_toy", 2, 2, {"r": 1.0}, 0)))
    out.append(make(ProblemSpec("scc_bilinear", 3, 2, {"mu_x": 0.5}, 4)))
    return out


def _fixed_point_matches_prox(rng) -> PropertyResult:
    worst = 0.0
    for seed in range(5):
        d = 1 + seed % 3
        p = make(ProblemSpec("quadratic_scsc", d, d, {"kappa_x": 10, "kappa_y": 10, "set_y": "whole"}, seed))
        P, A, _, _, b, *_ = p.kernel
        ell = p.profile.ell
        x_bar, z = rng.standard_normal(d), rng.standard_normal(d)
        exact = np.linalg.solve(P + 2.0 * ell * np.eye(d), 2.0 * ell * x_bar - A @ z - b)
        tol = 1e-12
        x, code, _, _ = engine.COMPILED.fixed_point_loop(p.kernel, p.set_x.packed, x_bar, z,
                                                         np.zeros(d), ell, tol, engine.new_counts())
        worst = max(worst, float(np.linalg.norm(x - exact)) - max(tol, 1e-13 * (1 + np.linalg.norm(exact))))
    return _result("fixed point equals proximal minimiser", worst, 0.0)


def suite_contraction(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for p in contraction_problems():
        for _ in range(100):
            x_bar = rng.standard_normal(p.dim_x)
            z = p.set_y.project(2.0 * rng.standard_normal(p.dim_y))
            a, b = 3.0 * rng.standard_normal(p.dim_x), 3.0 * rng.standard_normal(p.dim_x)
            ta, tb = contraction_map(p, x_bar, z, a), contraction_map(p, x_bar, z, b)
            worst = max(worst, float(np.linalg.norm(ta - tb) - 0.5 * np.linalg.norm(a - b)))
    return [_result("T_z is a 1/2-contraction (10 problems x 100 pairs)", worst, 1e-12),
            _fixed_point_matches_prox(rng)]


# ---------------------------------------------------------------------------
# structural lemmas


def lemma_problems() -> list:
    """Unconstrained SCSC quadratics, where y*(.), x*(.), Phi and Psi are closed form."""
    cases = [(1, 2, 3), (2, 10, 10), (3, 50, 4), (4, 4, 50), (5, 20, 20)]
    return [make(ProblemSpec("quadratic_scsc", d, d,
                             {"kappa_x": kx, "kappa_y": ky, "set_y": "whole", "coupling": 0.9}, 20 + i))
            for i, (d, kx, ky) in enumerate(cases)]


def _grad_phi(p, x):
    return p.grad_x(x, p.reference.y_star(x))


def _grad_psi(p, y):
    return p.grad_y(p.reference.x_star(y), y)


def _central_difference(fn: Callable, x: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def suite_lemma_lipschitz(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    w_y = w_x = w_phi = w_psi = -np.inf
    fd = 0.0
    for p in lemma_problems():
        prof, ref = p.profile, p.reference
        for _ in range(200):
            a, b = rng.standard_normal(p.dim_x), rng.standard_normal(p.dim_x)
            u, v = rng.standard_normal(p.dim_y), rng.standard_normal(p.dim_y)
            dx, dy = np.linalg.norm(a - b), np.linalg.norm(u - v)
            w_y = max(w_y, np.linalg.norm(ref.y_star(a) - ref.y_star(b)) - prof.kappa_y * dx)
            w_x = max(w_x, np.linalg.norm(ref.x_star(u) - ref.x_star(v)) - prof.kappa_x * dy)
            w_phi = max(w_phi, np.linalg.norm(_grad_phi(p, a) - _grad_phi(p, b)) - 2 * prof.kappa_y * prof.ell * dx)
            w_psi = max(w_psi, np.linalg.norm(_grad_psi(p, u) - _grad_psi(p, v)) - 2 * prof.kappa_x * prof.ell * dy)
        for _ in range(20):
            x = rng.standard_normal(p.dim_x)
            g = _grad_phi(p, x)
            num = _central_difference(ref.phi, x, 1e-5)
            fd = max(fd, float(np.linalg.norm(g - num) / max(np.linalg.norm(g), 1.0)))
    out = [
        _result("y*(.) is kappa_y-Lipschitz", w_y, 1e-10),
        _result("x*(.) is kappa_x-Lipschitz", w_x, 1e-10),
        _result("Phi is 2 kappa_y ell-smooth", w_phi, 1e-10),
        _result("Psi is 2 kappa_x ell-smooth", w_psi, 1e-10),
        _result("grad Phi matches central differences", fd, 1e-5, "worst relative error"),
    ]

    # nonconvex-strongly-concave sin toy: Phi is smooth with grad_x f(x, y*(x))
    p = make(ProblemSpec("nc_sc_sin", 2, 2, {"mu_y": 1.0, "r": 5.0}, 0))
    fd = 0.0
    for _ in range(50):
        x = rng.uniform(-3, 3, 2)
        g = _grad_phi(p, x)
        fd = max(fd, float(np.linalg.norm(g - _central_difference(p.reference.phi, x, 1e-5))
                           / max(np.linalg.norm(g), 1.0)))
    out.append(_result("sin toy: grad Phi matches central differences", fd, 1e-5, "worst relative error"))

    # nonconvex-concave toy: Phi + ell/2 ||x||^2 is convex
    p = make(ProblemSpec("nc_c_toy", 2, 2, {"r": 1.0}, 0))
    ell = p.profile.ell
    h = lambda x: p.reference.phi(x) + 0.5 * ell * float(x @ x)
    worst = -np.inf
    for _ in range(500):
        a, b = rng.uniform(-4, 4, 2), rng.uniform(-4, 4, 2)
        lam = rng.uniform()
        worst = max(worst, h(lam * a + (1 - lam) * b) - lam * h(a) - (1 - lam) * h(b))
    out.append(_result("nc toy: Phi is ell-weakly convex (500 triples)", worst, 1e-9))
    return out


# ---------------------------------------------------------------------------
# Moreau envelope


def _moreau_functions():
    """(name, Phi, ell) with Phi ell-weakly convex."""
    return [
        ("abs", lambda w: float(np.abs(w).sum()), 0.5),
        ("quadratic", lambda w: float(0.5 * (w - 0.3) @ (w - 0.3)), 1.0),
        ("sin", lambda w: float(np.sin(w).sum()), 1.0),
        ("huber", lambda w: float(np.where(np.abs(w) <= 1, 0.5 * w * w, np.abs(w) - 0.5).sum()), 0.5),
    ]


def suite_moreau(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    out = []
    absf = _moreau_functions()[0][1]
    prox, dist = near_stationarity_witness(absf, [2.0], 0.5)
    cert = moreau_grad_norm(absf, [2.0], 0.5)
    out.append(_result("|x| anchor: prox(2) = 1 at ell = 0.5", abs(prox[0] - 1.0), 1e-10, "error"))
    out.append(_result("|x| anchor: envelope gradient at 2 is 1", abs(cert.value - 1.0), 1e-10, "error"))
    out.append(_result("|x| anchor: witness distance is 1", abs(dist - 1.0), 1e-10, "error"))
    out.append(_result("|x| anchor: zero at the minimiser", moreau_grad_norm(absf, [0.0], 0.5).value, 1e-10, "value"))

    fd_worst = smooth_worst = descent_worst = -np.inf
    for name, phi, ell in _moreau_functions():
        env = lambda x: moreau_envelope(phi, np.array([x]), ell)
        grad = lambda x: 2.0 * ell * (x - near_stationarity_witness(phi, [x], ell)[0][0])
        for x in rng.uniform(-3, 3, 20):
            h = 1e-4
            fd = (env(x + h) - env(x - h)) / (2 * h)
            fd_worst = max(fd_worst, abs(fd - grad(x)))
        for _ in range(200):
            a, b = rng.uniform(-3, 3, 2)
            smooth_worst = max(smooth_worst, abs(grad(a) - grad(b)) - 4.0 * ell * abs(a - b))
            x = rng.uniform(-3, 3)
            w, _ = near_stationarity_witness(phi, [x], ell)
            descent_worst = max(descent_worst, phi(w) - phi(np.array([x])))
    out.append(_result("envelope gradient identity vs finite differences", fd_worst, 1e-4, "worst error"))
    out.append(_result("envelope gradient is 4 ell-Lipschitz (200 pairs)", smooth_worst, 1e-8))
    out.append(_result("descent: Phi(prox(x)) <= Phi(x) (200 points)", descent_worst, 1e-12))
    return out


# ---------------------------------------------------------------------------
# reductions


def suite_reductions(seed: int = 0, end_to_end: bool = True) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    out = []
    base = make(ProblemSpec("scc_bilinear", 2, 2, {"mu_x": 1.0, "D": 2.0}, 3))
    D = base.profile.diam_y
    y0 = np.zeros(2)

    def ball_sample():
        v = rng.standard_normal(2)
        return y0 + v / np.linalg.norm(v) * D * rng.uniform() ** 0.5

    eps = 0.1
    f_scc = reduce(base, ReductionSpec("scc", eps, np.zeros(2), y0))
    worst = max(abs(base.value(x, y) - f_scc.value(x, y)) - eps / 4
                for x, y in ((rng.standard_normal(2), ball_sample()) for _ in range(500)))
    out.append(_result("scc: |f - f_eps,y| <= eps/4 (500 samples)", worst, 0.0))

    f_nc = reduce(base, ReductionSpec("nc", eps, np.zeros(2), y0))
    worst = max(np.linalg.norm(base.grad_y(x, y) - f_nc.grad_y(x, y)) - eps / 2
                for x, y in ((rng.standard_normal(2), ball_sample()) for _ in range(500)))
    out.append(_result("nc: ||grad_y f - grad_y f~_eps|| <= eps/2 (500 samples)", worst, 0.0))

    same = reduce(base, ReductionSpec("scc", 0.0)) is base
    out.append(PropertyResult("scc with eps = 0 returns the base oracles", same))
    try:
        reduce(base, ReductionSpec("nc", 0.0))
        rejected = False
    except ValueError:
        rejected = True
    out.append(PropertyResult("nc with eps = 0 is rejected", rejected))

    cc_base = make(ProblemSpec("bilinear_simplex", 2, 2, {"A": [[1, -1], [-1, 1]]}, 0))
    Dx, Dy = cc_base.profile.diam_x, cc_base.profile.diam_y
    gains = {
        "scc": (0.0, eps / (2 * D ** 2)),
        "nc": (0.0, eps / (2 * D)),
        "nc_moreau": (0.0, eps ** 2 / (100 * base.profile.ell * D ** 2)),
    }
    err = 0.0
    for kind, (gx, gy) in gains.items():
        r = reduce(base, ReductionSpec(kind, eps))
        err = max(err, abs(r.profile.mu_x - base.profile.mu_x - gx), abs(r.profile.mu_y - gy))
        err = max(err, abs(r.profile.ell - base.profile.ell - max(gx, gy)))
    r = reduce(cc_base, ReductionSpec("cc", eps))
    err = max(err, abs(r.profile.mu_x - eps / (4 * Dx ** 2)), abs(r.profile.mu_y - eps / (4 * Dy ** 2)))
    out.append(_result("profile gains match the added curvature", err, 1e-15, "worst error"))

    if end_to_end:
        worst = -np.inf
        for e in (0.1, 0.02):
            res = scc_solve(base, np.ones(2), y0, eps=e, T=20, mode="practical")
            worst = max(worst, duality_gap(base, res.x, res.y).value - e)
            res = cc_solve(cc_base, [1.0, 0.0], [1.0, 0.0], eps=e, T=20, mode="practical")
            worst = max(worst, duality_gap(cc_base, res.x, res.y).value - e)
        out.append(_result("scc_solve and cc_solve reach gap <= eps on the original f", worst, 0.0))
    return out


# ---------------------------------------------------------------------------
# projections


def suite_projections(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    sets = [WholeSpace(3), Box(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 0.5, 3.0])),
            Ball(np.array([0.5, -1.0, 0.0]), 1.5), Simplex(3), Simplex(1)]
    member = idem = vi = expand = -np.inf
    for S in sets:
        for _ in range(200):
            p = 3.0 * rng.standard_normal(S.dim)
            q = 3.0 * rng.standard_normal(S.dim)
            pp, pq = S.project(p), S.project(q)
            member = max(member, 0.0 if S.contains(pp) else 1.0)
            idem = max(idem, float(np.linalg.norm(S.project(pp) - pp)))
            # variational inequality <p - P(p), z - P(p)> <= 0 for z in the set
            vi = max(vi, float((p - pp) @ (pq - pp)))
            expand = max(expand, float(np.linalg.norm(pp - pq) - np.linalg.norm(p - q)))
    return [
        _result("projection lands in the set", member, 0.0),
        _result("projection is idempotent", idem, 1e-12),
        _result("variational inequality", vi, 1e-10),
        _result("projection is nonexpansive", expand, 1e-12),
    ]


SUITES: dict[str, Callable[..., list[PropertyResult]]] = {
    "contraction": suite_contraction,
    "lemma-lipschitz": suite_lemma_lipschitz,
    "moreau": suite_moreau,
    "reductions": suite_reductions,
    "projections": suite_projections,
}


def run_suite(name: str) -> list[PropertyResult]:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
