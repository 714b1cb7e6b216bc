"""Constraint sets, problem containers, oracle accounting and solver reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from . import _loops

MEMBERSHIP_TOL = 1e-12

# run statuses
OK = "ok"
BUDGET_EXHAUSTED = "budget_exhausted"
NUMERICAL_FAILURE = "numerical_failure"
MISSING_DIAMETER = "missing_diameter"
UNCERTIFIABLE = "uncertifiable"
INVALID_CONFIG = "invalid_config"

_STATUS_OF_CODE = {_loops.OK: OK, _loops.BUDGET: BUDGET_EXHAUSTED, _loops.NUMERICAL: NUMERICAL_FAILURE}
_SEVERITY = {OK: 0, BUDGET_EXHAUSTED: 1, MISSING_DIAMETER: 2, NUMERICAL_FAILURE: 3}


class MissingDiameterError(ValueError):
    """A bounded set was required but the problem has none."""


def status_from_code(code: int) -> str:
    return _STATUS_OF_CODE[int(code)]


def worse_status(a: str, b: str) -> str:
    return a if _SEVERITY.get(a, 0) >= _SEVERITY.get(b, 0) else b


def as_vector(p, dim: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Validate ``p`` as a finite 1-D float vector, optionally of length ``dim``."""
    v = np.array(p, dtype=np.float64, ndmin=1)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise ValueError(f"{name} has dimension {v.size}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


# ---------------------------------------------------------------------------
# constraint sets


class ConstraintSet:
    """Closed convex set with exact Euclidean projection."""

    dim: int

    @property
    def packed(self) -> tuple:
        raise NotImplementedError

    def project(self, p) -> np.ndarray:
        v = as_vector(p, self.dim, "point")
        return np.array(_loops.project(self.packed, v), dtype=np.float64)

    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def diameter(self) -> Optional[float]:
        return None

    def bounding_box(self) -> Optional[tuple[np.ndarray, np.ndarray]]:
        return None


@dataclass(frozen=True, eq=False)
class WholeSpace(ConstraintSet):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def packed(self) -> tuple:
        z = np.zeros(self.dim)
        return (_loops.WHOLE, z, z, 0.0)

    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool:
        return as_vector(p, self.dim).size == self.dim


@dataclass(frozen=True, eq=False)
class Box(ConstraintSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, lo.size, name="upper")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, radius: float, dim: int) -> "Box":
        return cls(-radius * np.ones(dim), radius * np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def packed(self) -> tuple:
        return (_loops.BOX, self.lower, self.upper, 0.0)

    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool:
        v = as_vector(p, self.dim)
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def bounding_box(self):
        return self.lower, self.upper


@dataclass(frozen=True, eq=False)
class Ball(ConstraintSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("ball radius must be positive and finite")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def packed(self) -> tuple:
        return (_loops.BALL, self.center, self.center, self.radius)

    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool:
        v = as_vector(p, self.dim)
        return bool(np.linalg.norm(v - self.center) <= self.radius + tol)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True, eq=False)
class Simplex(ConstraintSet):
    """Probability simplex {p >= 0, sum p = 1}."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def packed(self) -> tuple:
        z = np.zeros(self.dim)
        return (_loops.SIMPLEX, z, z, 0.0)

    def contains(self, p, tol: float = MEMBERSHIP_TOL) -> bool:
        v = as_vector(p, self.dim)
        return bool(np.all(v >= -tol) and abs(v.sum() - 1.0) <= tol)

    def diameter(self) -> float:
        return math.sqrt(2.0) if self.dim > 1 else 0.0

    def bounding_box(self):
        return np.zeros(self.dim), np.ones(self.dim)


def project(constraint: ConstraintSet, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto ``constraint``."""
    return constraint.project(p)


def grad_mapping_norm(constraint: ConstraintSet, p, g, step: float) -> float:
    """(1/step) * ||p - P(p - step * g)||."""
    if not step > 0:
        raise ValueError("step must be positive")
    v = as_vector(p, constraint.dim, "point")
    gv = as_vector(g, constraint.dim, "gradient")
    return float(np.linalg.norm(v - constraint.project(v - step * gv)) / step)


# ---------------------------------------------------------------------------
# problems


@dataclass(frozen=True)
class SmoothnessProfile:
    ell: float
    mu_x: float = 0.0
    mu_y: float = 0.0
    diam_x: Optional[float] = None
    diam_y: Optional[float] = None

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if self.mu_x < 0 or self.mu_y < 0:
            raise ValueError("moduli must be nonnegative")
        if self.mu_x > self.ell * (1 + 1e-12) or self.mu_y > self.ell * (1 + 1e-12):
            raise ValueError("moduli cannot exceed ell")

    @property
    def kappa_x(self) -> float:
        return self.ell / self.mu_x if self.mu_x > 0 else math.inf

    @property
    def kappa_y(self) -> float:
        return self.ell / self.mu_y if self.mu_y > 0 else math.inf


@dataclass(frozen=True)
class Reference:
    """Closed-form facts about a problem, any of which may be absent."""

    saddle_x: Optional[np.ndarray] = None
    saddle_y: Optional[np.ndarray] = None
    phi: Optional[Callable[[np.ndarray], float]] = None  # max_y f(x, y)
    psi: Optional[Callable[[np.ndarray], float]] = None  # min_x f(x, y)
    y_star: Optional[Callable[[np.ndarray], np.ndarray]] = None
    x_star: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class MinimaxProblem:
    """min over set_x, max over set_y of f(x, y), given by first-order oracles.

    ``kernel`` optionally holds the structured-oracle tuple understood by the
    compiled loops; it must describe the same function as the callables.
    """

    value: Callable[[np.ndarray, np.ndarray], float]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray]
    set_x: ConstraintSet
    set_y: ConstraintSet
    profile: SmoothnessProfile
    reference: Optional[Reference] = None
    kernel: Optional[tuple] = None
    name: str = "custom"

    @property
    def dim_x(self) -> int:
        return self.set_x.dim

    @property
    def dim_y(self) -> int:
        return self.set_y.dim

    def with_profile(self, **changes) -> "MinimaxProblem":
        return replace(self, profile=replace(self.profile, **changes))


@dataclass
class OracleCounter:
    grad_x_calls: int = 0
    grad_y_calls: int = 0
    value_calls: int = 0

    @property
    def gradient_calls(self) -> int:
        return self.grad_x_calls + self.grad_y_calls

    def add_counts(self, counts) -> None:
        self.grad_x_calls += int(counts[0])
        self.grad_y_calls += int(counts[1])
        self.value_calls += int(counts[2])

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.grad_x_calls, self.grad_y_calls, self.value_calls)


def counted(problem: MinimaxProblem, counter: OracleCounter) -> MinimaxProblem:
    """Wrap the oracles so every call is tallied in ``counter``.

    The structured kernel is dropped so solvers go through the wrapped
    callables and the tally sees every evaluation.
    """

    def value(x, y):
        counter.value_calls += 1
        return problem.value(x, y)

    def grad_x(x, y):
        counter.grad_x_calls += 1
        return problem.grad_x(x, y)

    def grad_y(x, y):
        counter.grad_y_calls += 1
        return problem.grad_y(x, y)

    return replace(problem, value=value, grad_x=grad_x, grad_y=grad_y, kernel=None)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ToleranceRecord:
    name: str
    theoretical: float
    used: float

    @property
    def clamped(self) -> bool:
        return self.used != self.theoretical


@dataclass
class SolverReport:
    status: str = OK
    counter: OracleCounter = field(default_factory=OracleCounter)
    outer_iters: int = 0
    inner_iters: int = 0
    tolerances: list[ToleranceRecord] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)

    def set_status(self, status: str) -> None:
        self.status = worse_status(self.status, status)

    def clamp(self, name: str, theoretical: float, floor: float) -> float:
        """Record a tolerance and return ``max(theoretical, floor)``."""
        used = max(theoretical, floor)
        self.tolerances.append(ToleranceRecord(name, float(theoretical), float(used)))
        return used

    def note_fp_floor(self, hit: bool) -> None:
        if hit and not self.extras.get("fp_floor"):
            self.extras["fp_floor"] = True

    @property
    def clamped(self) -> bool:
        return any(r.clamped for r in self.tolerances) or bool(self.extras.get("fp_floor"))

    @property
    def faithful(self) -> bool:
        return not self.clamped

    @property
    def ok(self) -> bool:
        return self.status == OK


@dataclass
class SolveResult:
    x: np.ndarray
    y: Optional[np.ndarray]
    report: SolverReport

    def __iter__(self):
        yield (self.x, self.y) if self.y is not None else self.x
        yield self.report


def structured_kernel(P, A, Q, b, c, w=None, rx: float = 0.0, ax=None,
                      ry: float = 0.0, ay=None) -> tuple:
    """Pack quadratic-plus-sine data into the tuple read by the compiled loops."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    A = np.ascontiguousarray(A, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    m, n = A.shape
    w = np.zeros(0) if w is None else np.ascontiguousarray(w, dtype=np.float64)
    ax = np.zeros(m) if ax is None else np.ascontiguousarray(ax, dtype=np.float64)
    ay = np.zeros(n) if ay is None else np.ascontiguousarray(ay, dtype=np.float64)
    return (P, A, np.ascontiguousarray(A.T), Q,
            np.ascontiguousarray(b, dtype=np.float64), np.ascontiguousarray(c, dtype=np.float64),
            w, float(rx), ax, float(ry), ay)


def kernel_add_regularizer(kernel: tuple, cx: float, anchor_x, cy: float, anchor_y) -> tuple:
    """Add ``cx||x - anchor_x||^2 - cy||y - anchor_y||^2`` to a structured kernel.

    Quadratic terms with different anchors merge into one term with a
    weighted anchor; the constant offset does not affect gradients.
    """
    P, A, At, Q, b, c, w, rx, ax, ry, ay = kernel
    if cx:
        total = rx + cx
        ax = (rx * ax + cx * np.asarray(anchor_x, dtype=np.float64)) / total
        rx = total
    if cy:
        total = ry + cy
        ay = (ry * ay + cy * np.asarray(anchor_y, dtype=np.float64)) / total
        ry = total
    return (P, A, At, Q, b, c, w, float(rx), np.ascontiguousarray(ax), float(ry), np.ascontiguousarray(ay))


def add_quadratic_regularizer(base: MinimaxProblem, cx: float, anchor_x, cy: float, anchor_y,
                              name: str) -> MinimaxProblem:
    """``base + cx||x - anchor_x||^2 - cy||y - anchor_y||^2`` with an updated profile.

    ``mu_x`` gains ``2 cx``, ``mu_y`` gains ``2 cy`` and ``ell`` the larger of the two.
    """
    ax = as_vector(anchor_x, base.dim_x, "anchor_x")
    ay = as_vector(anchor_y, base.dim_y, "anchor_y")

    def value(x, y):
        dx, dy = x - ax, y - ay
        return base.value(x, y) + cx * float(dx @ dx) - cy * float(dy @ dy)

    def grad_x(x, y):
        g = np.asarray(base.grad_x(x, y), dtype=np.float64)
        return g + 2.0 * cx * (x - ax) if cx else g

    def grad_y(x, y):
        g = np.asarray(base.grad_y(x, y), dtype=np.float64)
        return g - 2.0 * cy * (y - ay) if cy else g

    kernel = None if base.kernel is None else kernel_add_regularizer(base.kernel, cx, ax, cy, ay)
    prof = base.profile
    profile = replace(prof, ell=prof.ell + 2.0 * max(cx, cy), mu_x=prof.mu_x + 2.0 * cx,
                      mu_y=prof.mu_y + 2.0 * cy)
    return MinimaxProblem(value, grad_x, grad_y, base.set_x, base.set_y, profile, None, kernel, name)
