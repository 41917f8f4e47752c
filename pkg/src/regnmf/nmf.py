"""Alternating multiplicative (MUR) and additive (AUR) regularized NMF drivers.

Both drivers alternate an ``L`` half-step with ``R`` fixed and an ``R``
half-step using the freshly updated ``L``.  Each half-step works with the
matrix forms of the half-problem's gradient pieces::

    F = W0R L (R W0C R^T) + sum_j W2RL_j L W2CL_j     (= G vec(L))
    D = W1L - W0R Y W0C R^T                          (= d)
    grad = F + D

and the ``R`` analogues.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDenominatorError, NumericError, ValidationError
from .linalg import as_matrix, trace_prod
from .qp import (CONVERGENCE_WINDOW, DENOM_FLOOR, Status, clamp_step,
                 lee_seung_direction, max_feasible_step, relative_decrease,
                 tau_schedule)
from .weights import ScalarWeights, WeightConfig, _l2_apply, _penalty, _sym, resolve_weights

logger = logging.getLogger(__name__)


@dataclass
class FactorPair:
    """Non-negative factors ``l`` (n x d) and ``r`` (d x m)."""

    l: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.l = as_matrix(self.l, "L")
        self.r = as_matrix(self.r, "R")
        if self.l.shape[1] != self.r.shape[0]:
            raise ValidationError(
                f"L is {self.l.shape} and R is {self.r.shape}: inner dimensions differ")
        if np.any(self.l < 0) or np.any(self.r < 0):
            raise ValidationError("factors must be non-negative")

    @property
    def rank(self):
        return self.l.shape[1]

    def product(self):
        return self.l @ self.r


@dataclass
class NmfOptions:
    """Options for :func:`murnmf`, :func:`aurnmf` and :func:`factorize`.

    ``epsilon=None`` means ``1e-7 * mean(|Y|)``.  ``init`` is either
    ``None`` (uniform random start, with ``init_sparsity`` of the entries
    zeroed) or a :class:`FactorPair`.  ``zero_escape`` lets the additive
    method revive zero entries whose gradient is negative; set it to
    ``False`` to get the direction rule exactly as originally listed.
    ``k_includes_ortho=False`` drops the non-orthogonality terms from the
    curvature used for the optimal additive step length.
    """

    rank: int
    weights: object = None
    method: str = "aur"
    epsilon: float = None
    tau: float = 0.5
    step_mode: str = "optimal"
    max_iters: int = 5000
    rel_tol: float = 1e-9
    seed: int = 0
    init: FactorPair = None
    init_sparsity: float = 0.0
    zero_escape: bool = True
    k_includes_ortho: bool = True

    def __post_init__(self):
        if int(self.rank) < 1:
            raise ValidationError("rank must be positive")
        self.rank = int(self.rank)
        if self.method not in ("mur", "aur"):
            raise ValidationError(f"method must be 'mur' or 'aur', got {self.method!r}")
        if self.step_mode not in ("optimal", "full"):
            raise ValidationError(f"step_mode must be 'optimal' or 'full', got {self.step_mode!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must lie in (0, 1), got {self.tau}")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be non-negative")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")
        if not 0.0 <= self.init_sparsity <= 1.0:
            raise ValidationError("init_sparsity must lie in [0, 1]")


@dataclass
class TraceRecord:
    """Diagnostics after iteration ``iter`` (0 is the starting point).

    ``alpha_l``/``alpha_r`` are only set by the additive method and
    ``clipped_count`` only by the multiplicative one.
    """

    iter: int
    objective: float
    frob_error: float
    alpha_l: float = None
    alpha_r: float = None
    clipped_count: int = None
    stalled: bool = False


@dataclass
class NmfResult:
    factors: FactorPair
    trace: list = field(default_factory=list)
    status: Status = Status.MAX_ITERS

    @property
    def iterations(self):
        return self.trace[-1].iter

    @property
    def objective(self):
        return self.trace[-1].objective

    @property
    def frob_error(self):
        return self.trace[-1].frob_error


def init_factors(rows_y, cols_y, rank_d, seed, sparsity=0.0, scale=1.0):
    """Random starting factors with entries ``scale * U(0, 1]``.

    After the values are drawn, ``round(sparsity * size)`` entries of each
    factor, chosen uniformly without replacement, are set to zero.  The
    values do not depend on ``sparsity``, so dense and sparse starts from the
    same seed share their nonzero entries.
    """
    if min(rows_y, cols_y, rank_d) < 1:
        raise ValidationError("dimensions must be positive")
    if not 0.0 <= sparsity <= 1.0:
        raise ValidationError("sparsity must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    l = scale * (1.0 - rng.random((rows_y, rank_d)))
    r = scale * (1.0 - rng.random((rank_d, cols_y)))
    if sparsity > 0:
        for m in (l, r):
            k = int(round(sparsity * m.size))
            m.flat[rng.choice(m.size, size=k, replace=False)] = 0.0
    return FactorPair(l, r)


def default_scale(y, rank_d):
    """Start scale ``sqrt(mean(Y) / d)`` so that ``L0 R0`` is near ``Y`` in size."""
    mean = float(np.mean(y))
    return float(np.sqrt(mean / rank_d)) if mean > 0 else 1.0


def check_convergence(trace, opts):
    """Return a terminal :class:`Status`, or ``None`` to keep iterating.

    Stalled when the last iteration could not move either factor;
    converged when the relative objective decrease stayed below
    ``opts.rel_tol`` for five consecutive iterations; ``max_iters`` once the
    iteration budget is spent.
    """
    if not trace:
        raise ValueError("trace is empty")
    last = trace[-1]
    if last.stalled:
        return Status.STALLED
    if len(trace) > CONVERGENCE_WINDOW:
        recent = trace[-CONVERGENCE_WINDOW - 1:]
        if all(relative_decrease(a.objective, b.objective) < opts.rel_tol
               for a, b in zip(recent, recent[1:])):
            return Status.CONVERGED
    if last.iter >= opts.max_iters:
        return Status.MAX_ITERS
    return None


class _Problem:
    """Per-solve constants and the matrix-form half-step pieces."""

    def __init__(self, y, w):
        self.y = y
        self.w = w
        ops = w.ops
        self.w0r, self.w0c = ops["w0r"], ops["w0c"]
        self.l2_l, self.l2_r = ops["l2_l"], ops["l2_r"]
        # W0R Y W0C never changes
        self.yw = self.w0c.rmul(self.w0r.lmul(y))
        self.plain = self.w0r.kind == "identity" and self.w0c.kind == "identity"

    def l_pieces(self, l, r):
        """``(F, D, R W0C R^T)`` for the L half-step."""
        rwr = _sym(self.w0c.sandwich(r, r.T))
        f = self.w0r.lmul(l @ rwr) + _l2_apply(self.l2_l, l)
        d = self.w.w1l - self.yw @ r.T
        return f, d, rwr

    def r_pieces(self, l, r):
        """``(F, D, L^T W0R L)`` for the R half-step."""
        lwl = _sym(self.w0r.sandwich(l.T, l))
        f = self.w0c.rmul(lwl @ r) + _l2_apply(self.l2_r, r)
        d = self.w.w1r - l.T @ self.yw
        return f, d, lwl

    def l_curvature(self, h, rwr, full_k):
        return self.w0r.lmul(h @ rwr) + _l2_apply(self.l2_l if full_k else self.l2_l[:1], h)

    def r_curvature(self, h, lwl, full_k):
        return self.w0c.rmul(lwl @ h) + _l2_apply(self.l2_r if full_k else self.l2_r[:1], h)

    def evaluate(self, l, r):
        """``(objective, frobenius error)``"""
        resid = self.y - l @ r
        sq = trace_prod(resid, resid)
        werr = sq if self.plain else trace_prod(resid, self.w0c.rmul(self.w0r.lmul(resid)))
        obj = (0.5 * werr + _penalty(self.w.w1l, self.l2_l, l)
               + _penalty(self.w.w1r, self.l2_r, r))
        return obj, float(np.sqrt(sq))


def _setup(y, opts):
    y = as_matrix(y, "Y")
    if np.any(y < 0):
        raise ValidationError("Y must be non-negative")
    n, m = y.shape
    w = resolve_weights(opts.weights, n, m, opts.rank)
    if opts.init is None:
        start = init_factors(n, m, opts.rank, opts.seed, opts.init_sparsity,
                             default_scale(y, opts.rank))
    else:
        start = opts.init
        if start.l.shape != (n, opts.rank) or start.r.shape != (opts.rank, m):
            raise ValidationError("initial factors do not match Y and rank")
    return y, _Problem(y, w), start.l.copy(), start.r.copy()


def _mult_update(x, numer, denom):
    """``-x * numer / denom`` with ``0/0 -> 0``."""
    num = -x * numer
    small = denom < DENOM_FLOOR
    if small.any():
        bad = small & (num != 0)
        if bad.any():
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise DegenerateDenominatorError(
                f"zero denominator with nonzero numerator at {idx}", index=idx)
        return np.where(small, 0.0, num / np.where(small, 1.0, denom))
    return num / denom


def _check_finite(k, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"non-finite values at iteration {k}", iteration=k)


def murnmf(y, opts):
    """Multiplicative-update regularized NMF.

    Each half-step is ``X <- -X * H / F`` with numerator ``H = D`` clipped
    to at most ``-epsilon`` so iterates stay non-negative whatever ``W1``
    is.  Entries that are zero stay zero.  The objective is guaranteed not
    to increase only on iterations where nothing was clipped.
    """
    y, prob, l, r = _setup(y, opts)
    eps = opts.epsilon if opts.epsilon is not None else 1e-7 * float(np.mean(np.abs(y)))
    if not eps > 0:
        eps = 1e-7
    obj, err = prob.evaluate(l, r)
    trace = [TraceRecord(0, obj, err, clipped_count=0)]
    status = check_convergence(trace, opts)
    k = 0
    while status is None:
        k += 1
        f, d, _ = prob.l_pieces(l, r)
        clipped = int(np.count_nonzero(d > -eps))
        l = _mult_update(l, np.minimum(d, -eps), f)
        f, d, _ = prob.r_pieces(l, r)
        clipped += int(np.count_nonzero(d > -eps))
        r = _mult_update(r, np.minimum(d, -eps), f)
        _check_finite(k, l, r)
        obj, err = prob.evaluate(l, r)
        trace.append(TraceRecord(k, obj, err, clipped_count=clipped))
        status = check_convergence(trace, opts)
    return NmfResult(FactorPair(l, r), trace, status)


def pick_direction(x, grad, f, zero_escape=False):
    """Additive search direction ``-grad * x / f`` for one factor.

    Where ``f`` and ``x`` are both zero the entry is ``max(-grad, 0)``;
    where only ``f`` is zero it is ``-grad * x``.  ``zero_escape`` extends
    the first rule to every zero entry of ``x``.
    """
    return lee_seung_direction(np.asarray(x, float), np.asarray(grad, float),
                               np.asarray(f, float), zero_escape)


def _additive_half_step(x, grad, h, k_mat, tau_k, step_mode):
    """Returns ``(x_new, alpha, stalled)``."""
    slope = trace_prod(grad, h)
    if not h.any() or not slope < 0:
        return x, 0.0, True
    alpha_hat = max_feasible_step(x, h)
    if step_mode == "full":
        alpha = min(1.0, tau_k * alpha_hat)
    else:
        curv = trace_prod(h, k_mat)
        alpha_star = -slope / curv if curv > DENOM_FLOOR else np.inf
        alpha = clamp_step(alpha_hat, alpha_star, tau_k, slope)
    if alpha <= 0:
        return x, 0.0, True
    return np.maximum(x + alpha * h, 0.0), float(alpha), False


def aurnmf(y, opts):
    """Additive-update regularized NMF.

    Each half-step moves along :func:`pick_direction` by the exact line
    minimizer, capped at ``tau_k`` times the largest feasible step, with
    ``tau_k = (tau + 1) / 2``.  With ``step_mode='full'`` the unit step is
    used instead of the line minimizer.
    """
    y, prob, l, r = _setup(y, opts)
    tau_k = tau_schedule(opts.tau)
    full_k = opts.k_includes_ortho
    obj, err = prob.evaluate(l, r)
    trace = [TraceRecord(0, obj, err)]
    status = check_convergence(trace, opts)
    k = 0
    while status is None:
        k += 1
        f, d, rwr = prob.l_pieces(l, r)
        grad = f + d
        h = pick_direction(l, grad, f, opts.zero_escape)
        l, alpha_l, stall_l = _additive_half_step(
            l, grad, h, prob.l_curvature(h, rwr, full_k), tau_k, opts.step_mode)
        f, d, lwl = prob.r_pieces(l, r)
        grad = f + d
        h = pick_direction(r, grad, f, opts.zero_escape)
        r, alpha_r, stall_r = _additive_half_step(
            r, grad, h, prob.r_curvature(h, lwl, full_k), tau_k, opts.step_mode)
        _check_finite(k, l, r)
        obj, err = prob.evaluate(l, r)
        trace.append(TraceRecord(k, obj, err, alpha_l, alpha_r,
                                 stalled=stall_l and stall_r))
        status = check_convergence(trace, opts)
    return NmfResult(FactorPair(l, r), trace, status)


def factorize(y, opts):
    """Dispatch to :func:`murnmf` or :func:`aurnmf` according to ``opts.method``."""
    return murnmf(y, opts) if opts.method == "mur" else aurnmf(y, opts)


__all__ = [
    "FactorPair", "NmfOptions", "NmfResult", "TraceRecord", "ScalarWeights",
    "WeightConfig", "init_factors", "default_scale", "check_convergence",
    "murnmf", "aurnmf", "pick_direction", "factorize",
]
