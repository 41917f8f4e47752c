"""Iterative solvers for ``min 1/2 x^T G x + d^T x`` subject to ``x >= 0``.

``G`` is symmetric, elementwise non-negative and positive semidefinite.
Three kinds of step are provided:

* :func:`mult_step`, the multiplicative (Lee-Seung) update;
* :func:`b_step`, the diagonal-surrogate step it is a special case of;
* :func:`giqpm_step`, an additive step ``x + alpha * h`` along a chosen
  direction, with ``alpha`` the smaller of the exact line minimizer and a
  fraction of the largest feasible step.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateDenominatorError, UnboundedDescentError, ValidationError
from .linalg import as_vector
from .weights import QpProblem

#: Denominators below this are treated as zero.
DENOM_FLOOR = 1e-300

#: Number of consecutive small decreases needed to declare convergence.
CONVERGENCE_WINDOW = 5


class StepStrategy(str, Enum):
    LEE_SEUNG = "lee_seung"
    SCALED_GRADIENT = "scaled_gradient"
    STEEPEST_DESCENT = "steepest_descent"
    DIAG_PRECOND = "diag_precond"


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STALLED = "stalled"


@dataclass
class QpSolveOptions:
    """Settings for :func:`giqpm_solve`.

    The default direction is ``scaled_gradient``: its ratio-test bound does
    not shrink as a coordinate approaches zero, whereas ``lee_seung`` can
    stall short of a boundary optimum when ``G`` is diagonal.
    """

    max_iters: int = 1000
    rel_tol: float = 1e-9
    tau: float = 0.5
    strategy: StepStrategy = StepStrategy.SCALED_GRADIENT
    seed: int = 0
    zero_escape: bool = False

    def __post_init__(self):
        self.strategy = StepStrategy(self.strategy)
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must lie in (0, 1), got {self.tau}")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")


@dataclass
class QpStep:
    """Outcome of one additive step."""

    x: np.ndarray
    alpha: float
    alpha_hat: float
    alpha_star: float
    stalled: bool


@dataclass
class QpTraceRecord:
    iter: int
    objective: float
    alpha: float = None
    alpha_hat: float = None
    alpha_star: float = None


@dataclass
class QpResult:
    x: np.ndarray
    trace: list = field(default_factory=list)
    status: Status = Status.MAX_ITERS
    strategy: StepStrategy = StepStrategy.SCALED_GRADIENT


def tau_schedule(tau):
    """Fixed step fraction ``tau_k = (tau + 1) / 2``."""
    return 0.5 * (tau + 1.0)


def _safe_ratio(num, den, what):
    """``num / den`` with ``0/0 -> 0``; raises for ``nonzero/0``."""
    small = den < DENOM_FLOOR
    if small.any():
        bad = small & (num != 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DegenerateDenominatorError(
                f"{what} is zero at index {i} with nonzero numerator", index=i)
        out = np.zeros_like(num)
        ok = ~small
        out[ok] = num[ok] / den[ok]
        return out
    return num / den


def mult_step(x, qp):
    """Multiplicative update ``-x * d / (G x)``.

    Never increases the objective when ``G x > 0``; keeps ``x >= 0`` when
    ``d <= 0``.  Coordinates with ``x[i] == 0`` stay zero.

    Raises
    ------
    DegenerateDenominatorError
        If ``(G x)[i]`` is zero while ``x[i] * d[i]`` is not.
    """
    x = as_vector(x, "x")
    return _safe_ratio(-x * qp.dvec, qp.g @ x, "G x")


def b_step(x, b, qp):
    """Surrogate step ``x - b * (d + G x) / (G b)`` for non-negative ``b``.

    With ``b == x`` this is exactly :func:`mult_step`.
    """
    x = as_vector(x, "x")
    b = as_vector(b, "b")
    if np.any(b < 0):
        raise ValidationError("b must be non-negative")
    if np.array_equal(b, x):
        return mult_step(x, qp)
    gb = qp.g @ b
    small = gb < DENOM_FLOOR
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise DegenerateDenominatorError(f"G b is zero at index {i}", index=i)
    return x - b * (qp.dvec + qp.g @ x) / gb


def surrogate_curvature(g, b):
    """Diagonal surrogate Hessian ``Diag(G b) Diag(b)^-1``; dominates ``G`` for ``b > 0``."""
    b = as_vector(b, "b")
    return np.diag((np.asarray(g) @ b) / b)


def lee_seung_direction(x, grad, f, zero_escape=False):
    """``-grad * x / f`` with the zero-denominator rules.

    Where ``f`` and ``x`` are both zero the component is
    ``max(-grad, 0)``; where ``f`` is zero but ``x > 0`` it is ``-grad * x``.
    With ``zero_escape`` the ``max(-grad, 0)`` rule is applied wherever
    ``x`` is zero, whatever ``f`` is, so zero entries can be revived.
    Works elementwise on arrays of any (common) shape.
    """
    fzero = f == 0
    xzero = x == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(fzero, -grad * x, -grad * x / np.where(fzero, 1.0, f))
    revive = xzero if zero_escape else (xzero & fzero)
    return np.where(revive, np.maximum(-grad, 0.0), h)


def direction(x, qp, strategy=StepStrategy.LEE_SEUNG, zero_escape=False):
    """Search direction at ``x``; the zero vector means no descent is available.

    Any nonzero return satisfies ``h @ grad < 0``.
    """
    x = as_vector(x, "x")
    strategy = StepStrategy(strategy)
    gx = qp.g @ x
    grad = gx + qp.dvec
    if strategy is StepStrategy.LEE_SEUNG:
        h = lee_seung_direction(x, grad, gx, zero_escape)
    elif strategy is StepStrategy.SCALED_GRADIENT:
        h = -grad * x
    elif strategy is StepStrategy.STEEPEST_DESCENT:
        h = -grad
    else:
        h = _diag_precond_direction(x, qp, grad)
    if not h @ grad < 0:
        return np.zeros_like(x)
    return h


def _diag_precond_direction(x, qp, grad):
    # surrogate step with b = pospart(x + d / diag(G))
    gdiag = np.diag(qp.g)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(gdiag > 0, np.maximum(x + qp.dvec / gdiag, 0.0), x)
    gb = qp.g @ b
    ok = (b > 0) & (gb >= DENOM_FLOOR)
    h = np.zeros_like(x)
    h[ok] = -b[ok] * grad[ok] / gb[ok]
    return h


def max_feasible_step(x, h):
    """Largest ``alpha`` with ``x + alpha * h >= 0`` (``inf`` if ``h >= 0``)."""
    neg = h < 0
    if not neg.any():
        return np.inf
    return float(np.min(-x[neg] / h[neg]))


def step_lengths(x, h, qp):
    """Return ``(alpha_hat, alpha_star)`` for direction ``h`` at ``x``.

    ``alpha_hat`` is the feasibility limit and ``alpha_star`` the exact
    minimizer of the objective along ``h``.
    """
    x = as_vector(x, "x")
    h = np.asarray(h, dtype=np.float64)
    if not h.any():
        raise ValueError("direction must be nonzero")
    slope = float((qp.g @ x + qp.dvec) @ h)
    curv = float(h @ (qp.g @ h))
    return max_feasible_step(x, h), _optimal_step(slope, curv)


def _optimal_step(slope, curv):
    return -slope / curv if curv > DENOM_FLOOR else np.inf


def clamp_step(alpha_hat, alpha_star, tau_k, slope):
    """``min(tau_k * alpha_hat, alpha_star)``, preferring ``alpha_star`` on ties."""
    if np.isinf(alpha_hat) and np.isinf(alpha_star) and slope < 0:
        raise UnboundedDescentError("objective is unbounded below along the direction")
    limit = tau_k * alpha_hat
    return alpha_star if alpha_star <= limit else limit


def giqpm_step(x, qp, tau_k, strategy=StepStrategy.LEE_SEUNG, zero_escape=False):
    """One additive projected step; never increases the objective."""
    x = as_vector(x, "x")
    h = direction(x, qp, strategy, zero_escape)
    if not h.any():
        return QpStep(x.copy(), 0.0, np.nan, np.nan, True)
    slope = float((qp.g @ x + qp.dvec) @ h)
    curv = float(h @ (qp.g @ h))
    alpha_hat = max_feasible_step(x, h)
    alpha_star = _optimal_step(slope, curv)
    alpha = clamp_step(alpha_hat, alpha_star, tau_k, slope)
    if alpha <= 0:
        return QpStep(x.copy(), 0.0, alpha_hat, alpha_star, True)
    x_new = np.maximum(x + alpha * h, 0.0)
    return QpStep(x_new, alpha, alpha_hat, alpha_star, False)


def relative_decrease(prev, cur):
    return (prev - cur) / max(abs(prev), DENOM_FLOOR)


def giqpm_solve(qp, opts=None, x0=None):
    """Run :func:`giqpm_step` until convergence, a stall or the iteration cap.

    Starts from ``x0`` or, if omitted, from a strictly positive random point
    drawn with ``opts.seed``.  Convergence means the relative objective
    decrease stayed below ``opts.rel_tol`` for five consecutive steps.
    """
    opts = opts or QpSolveOptions()
    if x0 is None:
        rng = np.random.default_rng(opts.seed)
        x = 0.5 + rng.random(qp.order)
    else:
        x = as_vector(x0, "x0")
        if x.shape != (qp.order,):
            raise ValidationError(f"x0 must have length {qp.order}")
        if np.any(x < 0):
            raise ValidationError("x0 must be non-negative")
        x = x.copy()
    tau_k = tau_schedule(opts.tau)
    obj = qp.objective(x)
    trace = [QpTraceRecord(0, obj)]
    small = 0
    status = Status.MAX_ITERS
    for k in range(1, opts.max_iters + 1):
        step = giqpm_step(x, qp, tau_k, opts.strategy, opts.zero_escape)
        x = step.x
        new_obj = qp.objective(x)
        trace.append(QpTraceRecord(k, new_obj, step.alpha, step.alpha_hat, step.alpha_star))
        if step.stalled:
            status = Status.STALLED
            break
        small = small + 1 if relative_decrease(obj, new_obj) < opts.rel_tol else 0
        obj = new_obj
        if small >= CONVERGENCE_WINDOW:
            status = Status.CONVERGED
            break
    return QpResult(x=x, trace=trace, status=status, strategy=opts.strategy)


def solve_qp(g, d, opts=None, x0=None):
    """Convenience wrapper building a :class:`QpProblem` from raw arrays."""
    return giqpm_solve(QpProblem(g=g, dvec=d), opts, x0)
