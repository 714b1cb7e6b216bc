"""Inner iteration loops shared by every solver.

Each loop is written once against a handful of module-level primitives
(gradients, projections, in-place vector updates).  Compiled with numba, the
gradient primitives evaluate the structured quadratic-plus-sine oracle below
and ``prob`` is a tuple of arrays.  The :mod:`minimaxkit.engine` module rebinds
the same loop code to plain-Python oracles so arbitrary callables run through
an identical sequence of operations.

Structured problem tuple layout::

    (P, A, At, Q, b, c, w, rx, ax, ry, ay)

    f(x, y) = 1/2 x'Px + x'Ay - 1/2 y'Qy + b'x + c'y + sum_i w_i sin(x_i)
              + rx ||x - ax||^2 - ry ||y - ay||^2

Constraint tuple layout: ``(kind, a, b, r)`` with kind 0 whole space, 1 box
``[a, b]``, 2 ball centred at ``a`` with radius ``r``, 3 probability simplex.
"""

import math

import numpy as np
from numba import njit

OK = 0
BUDGET = 1
NUMERICAL = 2

HARD_CAP = 10_000_000
# residuals below this multiple of machine precision (relative to the iterate
# size) cannot be resolved in double precision
FP_REL = 64.0 * 2.220446049250313e-16

WHOLE, BOX, BALL, SIMPLEX = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# vector primitives
#
# The loops work on preallocated buffers; at the dimensions of interest the
# cost of a temporary array rivals the gradient itself.  The engine rebinds
# every primitive below to a numpy one-liner for the plain-Python path.


@njit(cache=True)
def grad_x_into(prob, x, y, out):
    P, A, At, Q, b, c, w, rx, ax, ry, ay = prob
    m, n = x.size, y.size
    has_sin = w.size > 0
    for i in range(m):
        s = b[i]
        for j in range(m):
            s += P[i, j] * x[j]
        for j in range(n):
            s += A[i, j] * y[j]
        if has_sin:
            s += w[i] * math.cos(x[i])
        if rx != 0.0:
            s += 2.0 * rx * (x[i] - ax[i])
        out[i] = s


@njit(cache=True)
def grad_y_into(prob, x, y, out):
    P, A, At, Q, b, c, w, rx, ax, ry, ay = prob
    m, n = x.size, y.size
    for i in range(n):
        s = c[i]
        for j in range(m):
            s += At[i, j] * x[j]
        for j in range(n):
            s -= Q[i, j] * y[j]
        if ry != 0.0:
            s -= 2.0 * ry * (y[i] - ay[i])
        out[i] = s


@njit(cache=True)
def _project_simplex(p):
    n = p.size
    u = np.sort(p)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(n):
        css += u[i]
        t = (css - 1.0) / (i + 1)
        if u[i] - t > 0.0:
            theta = t
    out = np.empty(n)
    for i in range(n):
        out[i] = max(p[i] - theta, 0.0)
    return out


@njit(cache=True)
def project(S, p):
    out = np.empty(p.size)
    project_into(S, p, out)
    return out


@njit(cache=True)
def project_into(S, p, out):
    """out <- P_S(p); ``out`` may alias ``p``."""
    kind, a, b, r = S
    n = p.size
    if kind == WHOLE:
        for i in range(n):
            out[i] = p[i]
    elif kind == BOX:
        for i in range(n):
            out[i] = min(max(p[i], a[i]), b[i])
    elif kind == BALL:
        s = 0.0
        for i in range(n):
            s += (p[i] - a[i]) ** 2
        d = math.sqrt(s)
        scale = 1.0 if d <= r else r / d
        for i in range(n):
            out[i] = a[i] + (p[i] - a[i]) * scale
    else:
        q = _project_simplex(p)
        for i in range(n):
            out[i] = q[i]


@njit(cache=True)
def axpy_into(out, a, alpha, b):
    """out <- a + alpha b."""
    for i in range(out.size):
        out[i] = a[i] + alpha * b[i]


@njit(cache=True)
def extrapolate_into(out, x, theta, x_prev):
    """out <- x + theta (x - x_prev)."""
    for i in range(out.size):
        out[i] = x[i] + theta * (x[i] - x_prev[i])


@njit(cache=True)
def copy_into(out, src):
    for i in range(out.size):
        out[i] = src[i]


@njit(cache=True)
def add_prox_into(out, sign, z, w, c):
    """out <- sign * out + 2 w (z - c)."""
    for i in range(out.size):
        out[i] = sign * out[i] + 2.0 * w * (z[i] - c[i])


@njit(cache=True)
def sqdist(a, b):
    s = 0.0
    for i in range(a.size):
        s += (a[i] - b[i]) ** 2
    return s


@njit(cache=True)
def norm(v):
    s = 0.0
    for i in range(v.size):
        s += v[i] * v[i]
    return math.sqrt(s)


@njit(cache=True)
def finite(v):
    for i in range(v.size):
        if not math.isfinite(v[i]):
            return False
    return True


@njit(cache=True)
def agd_bound(kappa, ell, dist0_sq, eps):
    arg = max(kappa ** 3 * ell * dist0_sq / eps, math.e)
    return int(math.ceil(10.0 * math.sqrt(kappa) * math.log(arg))) + 10


# ---------------------------------------------------------------------------
# loops


@njit(cache=True)
def partial_grad_into(prob, side, fixed, z, w, c, out, cnt):
    """Gradient of z -> +-f plus the proximal term w||z - c||^2, written to ``out``.

    side 0 minimises f(z, fixed) over x; side 1 minimises -f(fixed, z) over y.
    """
    if side == 0:
        cnt[0] += 1
        grad_x_into(prob, z, fixed, out)
        if w != 0.0:
            add_prox_into(out, 1.0, z, w, c)
    else:
        cnt[1] += 1
        grad_y_into(prob, fixed, z, out)
        add_prox_into(out, -1.0, z, w, c)


@njit(cache=True)
def agd_loop(prob, S, side, fixed, x0, ell, mu, eps, w, c, cap, cnt):
    """Accelerated projected gradient with the residual stopping rule.

    Returns ``(x_hat, status, iters, floored)``.  ``cap <= 0`` derives the
    iteration cap from the first gradient-mapping residual, which bounds the
    initial distance to the minimiser by ``2 kappa r0``.
    """
    n = x0.size
    eta = 1.0 / ell
    kappa = ell / mu
    g = np.empty(n)
    x = np.empty(n)
    out = np.empty(n)
    if kappa <= 1.0 + 1e-9:
        partial_grad_into(prob, side, fixed, x0, w, c, g, cnt)
        if not finite(g):
            return x0.copy(), NUMERICAL, 1, False
        axpy_into(x, x0, -eta, g)
        project_into(S, x, x)
        partial_grad_into(prob, side, fixed, x, w, c, g, cnt)
        if not finite(g):
            return x, NUMERICAL, 1, False
        axpy_into(out, x, -eta, g)
        project_into(S, out, out)
        return out, OK, 1, False

    thr_sq = eps / (2.0 * kappa * kappa * (ell - mu))
    sk = math.sqrt(kappa)
    theta = (sk - 1.0) / (sk + 1.0)
    x_prev = x0.copy()
    x_mom = x0.copy()
    best = x0.copy()
    best_r = np.inf
    limit = cap
    t = 0
    while t < HARD_CAP:
        t += 1
        partial_grad_into(prob, side, fixed, x_mom, w, c, g, cnt)
        if not finite(g):
            return best, NUMERICAL, t, False
        axpy_into(x, x_mom, -eta, g)
        project_into(S, x, x)
        if t == 1 and limit <= 0:
            r0 = math.sqrt(sqdist(x0, x))
            limit = min(agd_bound(kappa, ell, (2.0 * kappa * r0) ** 2, eps), HARD_CAP)
        partial_grad_into(prob, side, fixed, x, w, c, g, cnt)
        if not finite(g):
            return best, NUMERICAL, t, False
        axpy_into(out, x, -eta, g)
        project_into(S, out, out)
        r = sqdist(x, out)
        if r < best_r:
            best_r = r
            copy_into(best, out)
        if r <= thr_sq:
            return out, OK, t, False
        floor = FP_REL * (1.0 + norm(x))
        if r <= floor * floor:
            return out, OK, t, True
        if t >= limit:
            return best, BUDGET, t, False
        extrapolate_into(x_mom, x, theta, x_prev)
        copy_into(x_prev, x)
    return best, BUDGET, t, False


@njit(cache=True)
def maximin_loop(prob, SX, SY, x0, y0, ell, mu_x, mu_y, eps_in, stop_sq,
                 w, c, outer_cap, agd_cap, warm, cnt):
    """Two-timescale loop: inner AGD in x, accelerated projected ascent in y.

    Returns ``(x_hat, x_t, y_t, status, outer, inner, floored)``.
    """
    kx = ell / mu_x
    ky = ell / mu_y
    eta = 1.0 / (2.0 * kx * ell)
    s = 4.0 * math.sqrt(kx * ky)
    theta = (s - 1.0) / (s + 1.0)
    y_prev = y0.copy()
    y_mom = y0.copy()
    y = y0.copy()
    gy = np.empty(y0.size)
    trial = np.empty(y0.size)
    x = x0.copy()
    start = x0
    status = OK
    inner = 0
    floored = False
    done = False
    t = 0
    while t < outer_cap:
        t += 1
        xm, st, it, fl = agd_loop(prob, SX, 0, y_mom, start, ell, mu_x, eps_in, w, c, agd_cap, cnt)
        inner += it
        floored = floored or fl
        if st == NUMERICAL:
            return xm, xm, y_mom, NUMERICAL, t, inner, floored
        if st == BUDGET:
            status = BUDGET
        cnt[1] += 1
        grad_y_into(prob, xm, y_mom, gy)
        if not finite(gy):
            return xm, xm, y_mom, NUMERICAL, t, inner, floored
        axpy_into(y, y_mom, eta, gy)
        project_into(SY, y, y)
        extrapolate_into(y_mom, y, theta, y_prev)
        if warm:
            start = xm
        x, st, it, fl = agd_loop(prob, SX, 0, y, start, ell, mu_x, eps_in, w, c, agd_cap, cnt)
        inner += it
        floored = floored or fl
        if st == NUMERICAL:
            return x, x, y, NUMERICAL, t, inner, floored
        if st == BUDGET:
            status = BUDGET
        if warm:
            start = x
        cnt[1] += 1
        grad_y_into(prob, x, y, gy)
        if not finite(gy):
            return x, x, y, NUMERICAL, t, inner, floored
        axpy_into(trial, y, eta, gy)
        project_into(SY, trial, trial)
        r = sqdist(y, trial)
        copy_into(y_prev, y)
        if r <= stop_sq:
            done = True
            break
        floor = FP_REL * (1.0 + norm(y))
        if r <= floor * floor:
            floored = True
            done = True
            break
    if not done:
        status = BUDGET
    gx = np.empty(x.size)
    partial_grad_into(prob, 0, y, x, w, c, gx, cnt)
    if not finite(gx):
        return x, x, y, NUMERICAL, t, inner, floored
    x_hat = np.empty(x.size)
    axpy_into(x_hat, x, -1.0 / (2.0 * ky * ell), gx)
    project_into(SX, x_hat, x_hat)
    return x_hat, x, y, status, t, inner, floored


@njit(cache=True)
def fixed_point_loop(prob, SX, x_bar, z, start, ell, tol, cnt):
    """Iterate x <- P_X(x_bar - grad_x f(x, z) / (2 ell)) to a step below ``tol``.

    Returns ``(x, status, iters, floored)``; ``x`` is the latest application.
    """
    n = start.size
    x = start.copy()
    xn = np.empty(n)
    g = np.empty(n)
    limit = HARD_CAP
    k = 0
    while k < HARD_CAP:
        k += 1
        cnt[0] += 1
        grad_x_into(prob, x, z, g)
        if not finite(g):
            return x, NUMERICAL, k, False
        axpy_into(xn, x_bar, -1.0 / (2.0 * ell), g)
        project_into(SX, xn, xn)
        r = math.sqrt(sqdist(xn, x))
        if k == 1:
            ratio = max(r / tol, 1.0)
            limit = min(int(math.ceil(math.log2(ratio))) + 64, HARD_CAP)
        copy_into(x, xn)
        if r <= tol:
            return x, OK, k, False
        if r <= FP_REL * (1.0 + norm(x)):
            return x, OK, k, True
        if k >= limit:
            return x, BUDGET, k, False
    return x, BUDGET, k, False


@njit(cache=True)
def g1_loop(prob, SX, SY, x_bar, x0, y0, ell, mu_bar, tol_first, tol_second,
            tol_stop, outer_cap, cnt):
    """Proximal minimax step by fixed-point inner solves and accelerated ascent.

    Returns ``(x, y, status, outer, inner, floored)``.
    """
    sk = math.sqrt(ell / mu_bar)
    mom = (2.0 * sk - 1.0) / (2.0 * sk + 1.0)
    ny = y0.size
    y_prev = y0.copy()
    z = y0.copy()
    y = y0.copy()
    gy = np.empty(ny)
    trial = np.empty(ny)
    x = x0.copy()
    status = OK
    inner = 0
    floored = False
    done = False
    k = 0
    while k < outer_cap:
        k += 1
        xt, st, it, fl = fixed_point_loop(prob, SX, x_bar, z, x0, ell, tol_first, cnt)
        inner += it
        floored = floored or fl
        if st == NUMERICAL:
            return xt, z, NUMERICAL, k, inner, floored
        if st == BUDGET:
            status = BUDGET
        cnt[1] += 1
        grad_y_into(prob, xt, z, gy)
        if not finite(gy):
            return xt, z, NUMERICAL, k, inner, floored
        axpy_into(y, z, 1.0 / (4.0 * ell), gy)
        project_into(SY, y, y)
        extrapolate_into(z, y, mom, y_prev)
        x, st, it, fl = fixed_point_loop(prob, SX, x_bar, y, x0, ell, tol_second, cnt)
        inner += it
        floored = floored or fl
        if st == NUMERICAL:
            return x, y, NUMERICAL, k, inner, floored
        if st == BUDGET:
            status = BUDGET
        cnt[1] += 1
        grad_y_into(prob, x, y, gy)
        if not finite(gy):
            return x, y, NUMERICAL, k, inner, floored
        axpy_into(trial, y, 1.0 / (4.0 * ell), gy)
        project_into(SY, trial, trial)
        r = math.sqrt(sqdist(y, trial))
        copy_into(y_prev, y)
        if r <= tol_stop:
            done = True
            break
        if r <= FP_REL * (1.0 + norm(y)):
            floored = True
            done = True
            break
    if not done:
        status = BUDGET
    return x, y, status, k, inner, floored


@njit(cache=True)
def g2_loop(prob, SY, x_fixed, y0, ell, mu_bar, tol_stop, outer_cap, cnt):
    """Nesterov ascent on y -> f(x_fixed, y) with a gradient-mapping stop.

    Returns ``(y, status, iters, floored)``.
    """
    sk = math.sqrt(ell / mu_bar)
    mom = (sk - 1.0) / (sk + 1.0)
    n = y0.size
    y_prev = y0.copy()
    z = y0.copy()
    y = y0.copy()
    g = np.empty(n)
    trial = np.empty(n)
    k = 0
    while k < outer_cap:
        k += 1
        cnt[1] += 1
        grad_y_into(prob, x_fixed, z, g)
        if not finite(g):
            return y, NUMERICAL, k, False
        axpy_into(y, z, 1.0 / ell, g)
        project_into(SY, y, y)
        extrapolate_into(z, y, mom, y_prev)
        copy_into(y_prev, y)
        cnt[1] += 1
        grad_y_into(prob, x_fixed, y, g)
        if not finite(g):
            return y, NUMERICAL, k, False
        axpy_into(trial, y, 1.0 / ell, g)
        project_into(SY, trial, trial)
        r = math.sqrt(sqdist(y, trial))
        if r <= tol_stop:
            return y, OK, k, False
        if r <= FP_REL * (1.0 + norm(y)):
            return y, OK, k, True
    return y, BUDGET, k, False


LOOP_NAMES = (
    "partial_grad_into",
    "agd_loop",
    "maximin_loop",
    "fixed_point_loop",
    "g1_loop",
    "g2_loop",
)

# primitives the plain-Python path replaces with numpy equivalents
PRIMITIVE_NAMES = (
    "grad_x_into",
    "grad_y_into",
    "project_into",
    "axpy_into",
    "extrapolate_into",
    "copy_into",
    "add_prox_into",
    "sqdist",
    "norm",
    "finite",
)
