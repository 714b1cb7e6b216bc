import math

import numpy as np
import pytest

from minimaxkit.appa import inexact_appa, suggest_T
from minimaxkit.core import WholeSpace

from oracles import appa_T_reference, prox_abs_plus_quadratic

# frozen from oracles.appa_T_reference; the closed form gives 829, not 830
T_K100_RATIO_1E6 = 829


def abs_prox(mu):
    return lambda z, ell, delta: np.array([prox_abs_plus_quadratic(float(z[0]), ell, mu)])


def test_soft_threshold_prox_oracle():
    # subgradient of |w| + w^2/2 + (w - z)^2 at the oracle's answer contains 0
    for z in (-3.0, -0.2, 0.0, 0.4, 2.5):
        w = prox_abs_plus_quadratic(z, 1.0, 1.0)
        rest = w + 2.0 * (w - z)
        if w == 0.0:
            assert abs(rest) <= 1.0
        else:
            assert math.copysign(1.0, w) + rest == pytest.approx(0.0, abs=1e-14)


def test_suggest_T_examples():
    assert suggest_T(1.0, 1e-3, 1e-3) == 6
    assert appa_T_reference(100, 1e6) == T_K100_RATIO_1E6
    assert suggest_T(100.0, 1e6, 1.0) == T_K100_RATIO_1E6
    assert suggest_T(400.0, 10.0, 1e-3) >= suggest_T(100.0, 10.0, 1e-3)
    assert suggest_T(100.0, 100.0, 1e-3) >= suggest_T(100.0, 10.0, 1e-3)


def test_nonsmooth_abs_converges():
    mu, ell, eps = 1.0, 1.0 + 1e-12, 1e-6
    g = lambda x: abs(float(x[0])) + 0.5 * mu * float(x[0]) ** 2
    x0 = np.array([2.0])
    T = suggest_T(ell / mu, g(x0) + mu / 4 * 4.0, eps)
    res = inexact_appa(g, WholeSpace(1), x0, ell, mu, eps, T, abs_prox(mu))
    assert res.status == "ok"
    assert abs(res.x[0]) <= 1e-3


def test_smooth_quadratic_converges():
    mu, ell, eps = 0.5, 1.0, 1e-8
    # argmin (w-3)^2/2 + ell (w - z)^2 is a 1-D linear solve
    prox = lambda z, l, d: np.array([(3.0 + 2.0 * l * z[0]) / (1.0 + 2.0 * l)])
    g = lambda x: 0.5 * (float(x[0]) - 3.0) ** 2
    T = suggest_T(ell / mu, g(np.zeros(1)) + mu / 4 * 9.0, eps)
    res = inexact_appa(g, WholeSpace(1), [0.0], ell, mu, eps, T, prox)
    assert abs(res.x[0] - 3.0) <= math.sqrt(2 * eps / mu)


def test_zero_iterations_returns_start():
    res = inexact_appa(None, WholeSpace(1), [1.5], 2.0, 1.0, 1e-3, 0, abs_prox(1.0))
    assert res.x[0] == 1.5 and res.report.outer_iters == 0


def test_delta_recorded_exactly():
    res = inexact_appa(None, WholeSpace(1), [1.5], 4.0, 1.0, 1e-3, 2, abs_prox(1.0))
    rec = res.report.tolerances[0]
    assert rec.name == "delta" and rec.used == 1e-3 / 40.0 ** 2


def test_bad_prox_output_is_numerical_failure():
    res = inexact_appa(None, WholeSpace(1), [1.0], 2.0, 1.0, 1e-3, 3, lambda z, l, d: np.array([np.inf]))
    assert res.status == "numerical_failure"


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        inexact_appa(None, WholeSpace(1), [1.0], 1.0, 1.0, 1e-3, 1, abs_prox(1.0))
    with pytest.raises(ValueError):
        inexact_appa(None, WholeSpace(1), [1.0], 2.0, 1.0, 1e-3, -1, abs_prox(1.0))
