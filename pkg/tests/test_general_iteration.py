import numpy as np
import pytest

from minimaxkit.core import Ball, Box, MinimaxProblem, SmoothnessProfile, WholeSpace
from minimaxkit.general_iteration import (contraction_map, g1, g2, nc_accelerated, nsc_accelerated,
                                          scc_near_optimal, scc_tolerances, scsc_near_optimal,
                                          smooth_y)
from minimaxkit.metrics import duality_gap, moreau_grad_norm, phi_grad_norm
from minimaxkit.problems import ProblemSpec, make, quadratic_problem


def quad(d, seed, kappa=5.0, radius=20.0):
    return make(ProblemSpec("quadratic_scsc", d, d,
                            {"kappa_x": kappa, "kappa_y": kappa, "radius_y": radius}, seed))


def prox_quadratic(p, x_bar):
    """The G1 subproblem of a quadratic is again a quadratic with P + 2 ell I and b - 2 ell x_bar."""
    P, A, _, Q, b, c = p.kernel[:6]
    ell, d = p.profile.ell, p.dim_x
    return quadratic_problem(P + 2 * ell * np.eye(d), A, Q, b - 2 * ell * x_bar, c,
                             WholeSpace(d), p.set_y)


def test_singleton_y_reduces_to_prox_point():
    p = quadratic_problem(np.eye(1), 3 * np.eye(1), np.eye(1), np.ones(1), np.zeros(1),
                          WholeSpace(1), Box([0.5], [0.5]))
    ell = p.profile.ell
    res = g1(p, [2.0], [0.0], 1e-8)
    # argmin x^2/2 + 1.5x + x + ell (x - 2)^2
    exact = (4 * ell - 2.5) / (1 + 2 * ell)
    tol = next(r.used for r in res.report.tolerances if r.name == "g1.tol_second")
    assert res.report.status == "ok"
    assert abs(res.point[0] - exact) <= tol


def _linear_in_x():
    a, b = 1.5, 0.3

    def value(x, y):
        return float(a * x @ y + b * x.sum() - 0.5 * y @ y)

    return MinimaxProblem(value, lambda x, y: a * y + b, lambda x, y: a * x - y,
                          WholeSpace(1), Ball(np.zeros(1), 1.0),
                          SmoothnessProfile(ell=2.0, mu_x=0.0, mu_y=1.0))


def test_linear_in_x_map_is_constant():
    p = _linear_in_x()
    z = np.array([0.4])
    first = contraction_map(p, [1.0], z, [5.0])
    assert np.array_equal(contraction_map(p, [1.0], z, first), first)
    assert np.array_equal(contraction_map(p, [1.0], z, [-3.0]), first)
    res = g1(p, [1.0], [0.0], 1e-6)
    y = res.report.extras["y"]
    np.testing.assert_allclose(res.point, contraction_map(p, [1.0], y, res.point), atol=1e-6)


@pytest.mark.parametrize("d,seed", [(1, 0), (1, 1), (2, 0), (2, 1)])
def test_g1_criterion_certified(d, seed):
    p = quad(d, seed)
    x_bar, eps_bar = np.full(d, 0.3), 1e-4
    res = g1(p, x_bar, np.zeros(d), eps_bar)
    assert res.report.status == "ok"
    sub = prox_quadratic(p, x_bar)
    assert sub.reference.saddle_y is not None
    gap = duality_gap(sub, res.point, sub.reference.saddle_y)
    assert gap.value <= eps_bar + gap.error


def test_g2_interior_and_projected_maximiser():
    def problem(c):
        return MinimaxProblem(lambda x, y: -float((y - c) @ (y - c)), lambda x, y: np.zeros(1),
                              lambda x, y: -2.0 * (y - c), WholeSpace(1), Ball(np.zeros(1), 1.0),
                              SmoothnessProfile(ell=2.0, mu_x=0.0, mu_y=2.0))

    inside = g2(problem(np.array([0.3])), [0.0], 1e-10)
    assert abs(inside.point[0] - 0.3) <= 1e-5
    outside = g2(problem(np.array([2.5])), [0.0], 1e-10)
    assert abs(outside.point[0] - 1.0) <= 1e-5


@pytest.mark.parametrize("d,seed", [(1, 2), (2, 2)])
def test_g2_criterion_certified(d, seed):
    p = quad(d, seed)
    P, A, _, Q, b, c = p.kernel[:6]
    x_t, eps_t = np.full(d, -0.2), 1e-5
    y_best = np.linalg.solve(Q, A.T @ x_t + c)
    assert p.set_y.contains(y_best)
    res = g2(p, x_t, eps_t)
    assert p.value(x_t, y_best) - p.value(x_t, res.point) <= eps_t


def test_g1_requires_strong_concavity_and_diameter():
    flat = MinimaxProblem(lambda x, y: 0.0, lambda x, y: x, lambda x, y: np.zeros(1),
                          WholeSpace(1), Ball(np.zeros(1), 1.0), SmoothnessProfile(ell=1.0))
    with pytest.raises(ValueError):
        g1(flat, [0.0], [0.0], 1e-3)
    unbounded = quadratic_problem(np.eye(1), np.zeros((1, 1)), np.eye(1), np.zeros(1), np.zeros(1),
                                  WholeSpace(1), WholeSpace(1))
    assert g1(unbounded, [0.0], [0.0], 1e-3).report.status == "missing_diameter"


def test_scsc_near_optimal_distance_certificate():
    p = make(ProblemSpec("quadratic_scsc", 2, 2, {"kappa_x": 10, "kappa_y": 10}, 1))
    eps = 1e-3
    res = scsc_near_optimal(p, np.zeros(2), eps, 20)
    sq = (np.sum((res.x - p.reference.saddle_x) ** 2) + np.sum((res.y - p.reference.saddle_y) ** 2))
    assert sq <= eps


def test_scsc_unit_condition_trivial():
    p = quadratic_problem(np.eye(1), np.zeros((1, 1)), np.eye(1), np.array([-1.0]), np.array([0.5]),
                          WholeSpace(1), Ball(np.zeros(1), 2.0))
    res = scsc_near_optimal(p, [0.0], 1e-4, 30)
    assert abs(res.x[0] - 1.0) ** 2 + abs(res.y[0] - 0.5) ** 2 <= 1e-4


def test_momentum_correction_at_unit_kappa():
    p = quadratic_problem(np.eye(1), np.zeros((1, 1)), np.eye(1), np.zeros(1), np.zeros(1),
                          WholeSpace(1), Ball(np.zeros(1), 1.0))
    res = scsc_near_optimal(p, [0.0], 1e-3, 0)
    assert res.report.extras["correction"] == 1.0 / 6.0
    assert res.report.extras["momentum"] == 1.0 / 3.0


def scc_line():
    return make(ProblemSpec("scc_bilinear", 1, 1, {"A": [[1.0]], "mu_x": 1.0, "D": 2.0}))


@pytest.mark.parametrize("eta", ["eps_bar", "eps"])
def test_scc_near_optimal_gap(eta):
    p = scc_line()
    for eps in (0.1, 0.02):
        res = scc_near_optimal(p, [1.0], [0.0], eps, 5, eta=eta)
        assert res.report.status == "ok"
        assert duality_gap(p, res.x, res.y).value <= eps
        assert res.report.extras["eta"]["choice"] == eta


def test_scc_tolerance_order_and_clamp():
    for kappa in (1.0, 10.0, 100.0):
        for eps in (1e-4, 1e-2, 1.0):
            bar, tilde = scc_tolerances(eps, kappa, 1.0, 2.0)
            assert bar < tilde
    p = make(ProblemSpec("scc_bilinear", 1, 1, {"A": [[1.0]], "mu_x": 0.01, "D": 2.0}))
    assert p.profile.ell / p.profile.mu_x >= 100
    res = scc_near_optimal(p, [0.0], [0.0], 1e-4, 0, outer_cap=5)
    assert res.report.clamped
    assert any(r.name == "eps_bar" and r.clamped for r in res.report.tolerances)


def test_smooth_y_adds_concavity():
    p = scc_line()
    fe = smooth_y(p, 0.4, np.zeros(1))
    assert fe.profile.mu_y == pytest.approx(0.4 / 4.0)
    assert fe.value(np.ones(1), np.ones(1)) == pytest.approx(p.value(np.ones(1), np.ones(1)) - 0.05)
    with pytest.raises(ValueError):
        smooth_y(p, 0.0, np.zeros(1))


def sin_toy():
    return make(ProblemSpec("nc_sc_sin", 1, 1, {"mu_y": 2.0, "r": 1.0}))


def test_nsc_accelerated_sin_toy():
    p, eps = sin_toy(), 1e-2
    hits = 0
    for seed in range(20):
        res = nsc_accelerated(p, [1.0], eps, 80, seed)
        cert = phi_grad_norm(p, res.x)
        hits += cert.value <= eps + cert.error
    assert hits >= 11


def test_nsc_convex_case_and_determinism():
    p = quadratic_problem(np.eye(1), np.zeros((1, 1)), np.eye(1), np.zeros(1), np.zeros(1),
                          WholeSpace(1), Ball(np.zeros(1), 1.0))
    res = nsc_accelerated(p, [1.0], 1e-3, 30, 4)
    again = nsc_accelerated(p, [1.0], 1e-3, 30, 4)
    assert np.array_equal(res.x, again.x) and res.report.extras["s"] == again.report.extras["s"]
    assert 0 <= res.report.extras["s"] <= 29
    with pytest.raises(ValueError):
        nsc_accelerated(p, [1.0], 1e-3, 30, None)


def test_nc_accelerated_concave_toy():
    q = make(ProblemSpec("nc_c_toy", 1, 1, {"r": 1.0}))
    hits = 0
    for seed in range(20):
        res = nc_accelerated(q, [2.0], [0.0], 1e-2, 20, seed)
        assert 1 <= res.report.extras["s"] <= 21
        hits += moreau_grad_norm(q, res.x, q.profile.ell).value <= 1e-2
    assert hits >= 11
    a = nc_accelerated(q, [2.0], [0.0], 1e-2, 20, 3)
    b = nc_accelerated(q, [2.0], [0.0], 1e-2, 20, 3)
    assert np.array_equal(a.x, b.x)


def test_nc_weak_convexity_of_phi():
    q = make(ProblemSpec("nc_c_toy", 1, 1, {"r": 1.0}))
    phi, ell = q.reference.phi, q.profile.ell
    rng = np.random.default_rng(0)
    for _ in range(300):
        a, b = rng.uniform(-3, 3, size=1), rng.uniform(-3, 3, size=1)
        lam = rng.uniform()
        mid = lam * a + (1 - lam) * b
        rhs = lam * phi(a) + (1 - lam) * phi(b) + ell / 2 * lam * (1 - lam) * float((a - b) @ (a - b))
        assert phi(mid) <= rhs + 1e-12
