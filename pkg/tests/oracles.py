"""Independent reference computations used to freeze expected values.

Nothing here imports the package under test.  Each routine solves its
problem a different way from the library (exact rationals, enumeration,
closed forms) so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def solve_2x2(a11, a12, a21, a22, r1, r2) -> tuple[Fraction, Fraction]:
    """Cramer's rule in exact arithmetic."""
    a11, a12, a21, a22, r1, r2 = map(Fraction, (a11, a12, a21, a22, r1, r2))
    det = a11 * a22 - a12 * a21
    return (r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det


def simplex_projection_by_enumeration(p: list[float]) -> list[float]:
    """Minimise ||w - p||^2 over the simplex by trying every support set.

    On a support S the KKT system gives w_i = p_i - tau for i in S with
    tau = (sum_S p - 1)/|S|; the best feasible candidate is the projection.
    """
    n = len(p)
    best, best_val = None, math.inf
    for k in range(1, n + 1):
        for support in itertools.combinations(range(n), k):
            tau = (sum(p[i] for i in support) - 1.0) / k
            w = [p[i] - tau if i in support else 0.0 for i in range(n)]
            if min(w) < -1e-15:
                continue
            val = sum((wi - pi) ** 2 for wi, pi in zip(w, p))
            if val < best_val:
                best, best_val = w, val
    return best


def matrix_game_gap_by_vertices(A, x, y) -> float:
    """max_j (x'A)_j - min_i (Ay)_i; linear objectives peak at simplex vertices."""
    m, n = len(A), len(A[0])
    col = [sum(x[i] * A[i][j] for i in range(m)) for j in range(n)]
    row = [sum(A[i][j] * y[j] for j in range(n)) for i in range(m)]
    return max(col) - min(row)


def soft_threshold(v: float, t: float) -> float:
    return math.copysign(max(abs(v) - t, 0.0), v)


def prox_abs_plus_quadratic(z: float, ell: float, mu: float) -> float:
    """argmin_w |w| + mu/2 w^2 + ell (w - z)^2 from the subgradient condition."""
    return soft_threshold(2.0 * ell * z, 1.0) / (mu + 2.0 * ell)


def moreau_abs(x_hat: float, ell: float) -> tuple[float, float]:
    """(prox point, envelope gradient norm) for |x| with weight ell||w - x||^2."""
    w = soft_threshold(x_hat, 1.0 / (2.0 * ell))
    return w, 2.0 * ell * abs(x_hat - w)


def stationarity_reference() -> tuple[float, float]:
    """Residuals of f = x^2 + xy - y^2 at (1, 0) with step 1/ell, ell = sqrt 5.

    grad_y(1, 0) = 1 so y+ = 1/sqrt 5 and r_y = 1; grad_x(1, 1/sqrt 5) = 2 + 1/sqrt 5.
    """
    return 2.0 + 1.0 / math.sqrt(5.0), 1.0


def agd_bound_reference(kappa: float, ell: float, dist0_sq: float, eps: float) -> int:
    return math.ceil(10.0 * math.sqrt(kappa) * math.log(max(kappa ** 3 * ell * dist0_sq / eps, math.e))) + 10


def appa_T_reference(kappa: float, ratio: float, c: float = 6.0) -> int:
    return math.ceil(c * math.sqrt(kappa) * math.log(max(ratio, math.e)))


def ppa_T_reference(ell: float, delta_phi: float, eps: float) -> int:
    return math.ceil(8.0 * ell * delta_phi / eps ** 2) + 1
