"""Weighted, regularized factorization objective and its quadratic subproblems.

The objective minimized over ``L >= 0, R >= 0`` is::

    1/2 tr((Y - LR)^T W0R (Y - LR) W0C)
      + tr(W1L^T L) + tr(W1R^T R)
      + 1/2 sum_j tr(L^T W2RL_j L W2CL_j)
      + 1/2 sum_j tr(R^T W2RR_j R W2CR_j)

With one factor held fixed the problem in the other factor ``X`` is a
non-negative quadratic program ``min 1/2 x^T G x + d^T x`` in ``x = vec(X)``;
:func:`build_qp` assembles it explicitly (small problems only) so the matrix
form updates can be checked against it.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ShapeError, ValidationError
from .linalg import as_matrix, kron, offdiag, trace_prod, vec

logger = logging.getLogger(__name__)

#: Orders above this skip the eigenvalue PSD check on construction.
PSD_CHECK_MAX_ORDER = 500

#: Default cap on the order of an assembled QP Hessian.
QP_MAX_ORDER = 10_000


class RankWarning(UserWarning):
    """The fixed factor of a half-problem is numerically rank deficient."""


class WeightOp:
    """A square weighting matrix that knows whether it is zero, identity or diagonal.

    Applying identity or diagonal weights is done without a dense product,
    which matters when ``W0R`` has the order of the row count of ``Y``.
    """

    __slots__ = ("matrix", "kind", "diag")

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        self.matrix = m
        self.diag = None
        if not m.any():
            self.kind = "zero"
        elif np.count_nonzero(m - np.diag(np.diag(m))) == 0:
            self.diag = np.diag(m).copy()
            self.kind = "identity" if np.all(self.diag == 1.0) else "diag"
        else:
            self.kind = "dense"

    def lmul(self, x):
        """``W @ x``"""
        if self.kind == "identity":
            return x
        if self.kind == "diag":
            return self.diag[:, None] * x
        if self.kind == "zero":
            return np.zeros((self.matrix.shape[0], x.shape[1]))
        return self.matrix @ x

    def rmul(self, x):
        """``x @ W``"""
        if self.kind == "identity":
            return x
        if self.kind == "diag":
            return x * self.diag[None, :]
        if self.kind == "zero":
            return np.zeros((x.shape[0], self.matrix.shape[1]))
        return x @ self.matrix

    def sandwich(self, a, b):
        """``a @ W @ b``"""
        if self.kind == "identity":
            return a @ b
        if self.kind == "zero":
            return np.zeros((a.shape[0], b.shape[1]))
        return a @ self.lmul(b)


def _check_weight_matrix(m, name, order, psd=True):
    if m.shape != (order, order):
        raise ShapeError(f"{name} must be {order}x{order}, got {m.shape}")
    if np.any(m < 0):
        raise ValidationError(f"{name} has negative entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-12 * scale:
        raise ValidationError(f"{name} is not symmetric")
    if not psd or np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        return  # non-negative diagonal: PSD
    if order > PSD_CHECK_MAX_ORDER:
        logger.warning("skipping PSD check of %s (order %d > %d)",
                       name, order, PSD_CHECK_MAX_ORDER)
        return
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < -1e-8 * np.linalg.norm(m, 2):
        raise ValidationError(f"{name} is not positive semidefinite (min eig {min_eig:g})")


@dataclass
class ScalarWeights:
    """Elastic-net plus non-orthogonality penalties described by six scalars."""

    lambda1_l: float = 0.0
    lambda1_r: float = 0.0
    lambda2_l: float = 0.0
    lambda2_r: float = 0.0
    gamma2_l: float = 0.0
    gamma2_r: float = 0.0

    def __post_init__(self):
        for name in ("lambda1_l", "lambda1_r", "lambda2_l",
                     "lambda2_r", "gamma2_l", "gamma2_r"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and non-negative, got {value}")
            setattr(self, name, value)


@dataclass
class WeightConfig:
    """Full family of weighting matrices for an ``n x m`` target and rank ``d``.

    ``l2_terms_l`` holds ``(row_weight, col_weight)`` pairs of shapes
    ``(n, n)`` and ``(d, d)``; ``l2_terms_r`` holds pairs of shapes
    ``(d, d)`` and ``(m, m)``.
    """

    w0r: np.ndarray
    w0c: np.ndarray
    w1l: np.ndarray
    w1r: np.ndarray
    l2_terms_l: tuple = ()
    l2_terms_r: tuple = ()
    ops: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.w0r = as_matrix(self.w0r, "w0r")
        self.w0c = as_matrix(self.w0c, "w0c")
        self.w1l = as_matrix(self.w1l, "w1l")
        self.w1r = as_matrix(self.w1r, "w1r")
        n, m = self.w0r.shape[0], self.w0c.shape[0]
        if self.w1l.shape[0] != n:
            raise ShapeError(f"w1l must have {n} rows, got {self.w1l.shape}")
        d = self.w1l.shape[1]
        if self.w1r.shape != (d, m):
            raise ShapeError(f"w1r must be {d}x{m}, got {self.w1r.shape}")
        _check_weight_matrix(self.w0r, "w0r", n)
        _check_weight_matrix(self.w0c, "w0c", m)
        for name, w1 in (("w1l", self.w1l), ("w1r", self.w1r)):
            if np.any(w1 < 0):
                raise ValidationError(f"{name} has negative entries")
        self.l2_terms_l = tuple(
            self._pairs(self.l2_terms_l, n, d, "l2_terms_l"))
        self.l2_terms_r = tuple(
            self._pairs(self.l2_terms_r, d, m, "l2_terms_r"))
        self.ops = {
            "w0r": WeightOp(self.w0r),
            "w0c": WeightOp(self.w0c),
            "l2_l": [(WeightOp(a), WeightOp(b)) for a, b in self.l2_terms_l],
            "l2_r": [(WeightOp(a), WeightOp(b)) for a, b in self.l2_terms_r],
        }

    @staticmethod
    def _pairs(terms, rows, cols, name):
        for j, (wr, wc) in enumerate(terms):
            wr = as_matrix(wr, f"{name}[{j}].row")
            wc = as_matrix(wc, f"{name}[{j}].col")
            # offdiag masks are indefinite, so quadratic terms only need
            # symmetry and non-negativity
            _check_weight_matrix(wr, f"{name}[{j}].row", rows, psd=False)
            _check_weight_matrix(wc, f"{name}[{j}].col", cols, psd=False)
            yield wr, wc

    @property
    def shape(self):
        """``(rows(Y), cols(Y), rank)``"""
        return self.w0r.shape[0], self.w0c.shape[0], self.w1l.shape[1]

    def check_conformable(self, y, l=None, r=None):
        n, m, d = self.shape
        if y.shape != (n, m):
            raise ShapeError(f"Y is {y.shape} but weights expect {(n, m)}")
        if l is not None and l.shape != (n, d):
            raise ShapeError(f"L is {l.shape} but weights expect {(n, d)}")
        if r is not None and r.shape != (d, m):
            raise ShapeError(f"R is {r.shape} but weights expect {(d, m)}")


def expand_scalar_weights(s, rows_y, cols_y, rank_d):
    """Build the full :class:`WeightConfig` from six scalar penalties.

    Unit error weights, ``W1 = lambda1 * ones`` on each side and two
    quadratic terms per side: a ridge term ``(lambda2 * I, I)`` and a
    non-orthogonality term ``(I, gamma2 * offdiag)`` whose column weight
    penalizes the off-diagonal entries of the factor's Gram matrix
    ``X^T X`` (order ``d`` for ``L``, order ``cols_y`` for ``R``).
    """
    if min(rows_y, cols_y, rank_d) < 1:
        raise ValidationError("dimensions must be positive")
    if not isinstance(s, ScalarWeights):
        raise TypeError("expected ScalarWeights")
    n, m, d = rows_y, cols_y, rank_d
    return WeightConfig(
        w0r=np.eye(n),
        w0c=np.eye(m),
        w1l=s.lambda1_l * np.ones((n, d)),
        w1r=s.lambda1_r * np.ones((d, m)),
        l2_terms_l=((s.lambda2_l * np.eye(n), np.eye(d)),
                    (np.eye(n), s.gamma2_l * offdiag(d))),
        l2_terms_r=((s.lambda2_r * np.eye(d), np.eye(m)),
                    (np.eye(d), s.gamma2_r * offdiag(m))),
    )


def resolve_weights(weights, rows_y, cols_y, rank_d):
    """Return a :class:`WeightConfig` for either weight flavour (``None`` = no penalties)."""
    if weights is None:
        weights = ScalarWeights()
    if isinstance(weights, ScalarWeights):
        return expand_scalar_weights(weights, rows_y, cols_y, rank_d)
    if isinstance(weights, WeightConfig):
        if weights.shape != (rows_y, cols_y, rank_d):
            raise ShapeError(
                f"weights are for {weights.shape}, problem is {(rows_y, cols_y, rank_d)}")
        return weights
    raise TypeError(f"unsupported weights type {type(weights).__name__}")


def _l2_apply(terms, x):
    """``sum_j Wr_j @ x @ Wc_j``"""
    out = np.zeros_like(x)
    for wr, wc in terms:
        if wr.kind == "zero" or wc.kind == "zero":
            continue
        out += wc.rmul(wr.lmul(x))
    return out


def _penalty(w1, terms, x):
    return trace_prod(w1, x) + 0.5 * trace_prod(x, _l2_apply(terms, x))


def weighted_sq_error(resid, w):
    """``tr(E^T W0R E W0C)`` for a residual ``E``."""
    ops = w.ops
    return trace_prod(resid, ops["w0c"].rmul(ops["w0r"].lmul(resid)))


def objective(y, l, r, w):
    """Value of the regularized objective at ``(L, R)``."""
    y, l, r = as_matrix(y, "Y"), as_matrix(l, "L"), as_matrix(r, "R")
    w = resolve_weights(w, y.shape[0], y.shape[1], l.shape[1])
    w.check_conformable(y, l, r)
    resid = y - l @ r
    ops = w.ops
    return (0.5 * weighted_sq_error(resid, w)
            + _penalty(w.w1l, ops["l2_l"], l)
            + _penalty(w.w1r, ops["l2_r"], r))


def _sym(a):
    return 0.5 * (a + a.T)


def gradient_L(y, l, r, w):
    """Gradient of :func:`objective` with respect to ``L``."""
    y, l, r = as_matrix(y, "Y"), as_matrix(l, "L"), as_matrix(r, "R")
    w = resolve_weights(w, y.shape[0], y.shape[1], l.shape[1])
    w.check_conformable(y, l, r)
    ops = w.ops
    rwr = _sym(ops["w0c"].sandwich(r, r.T))
    yw = ops["w0c"].rmul(ops["w0r"].lmul(y))
    return (ops["w0r"].lmul(l @ rwr) + _l2_apply(ops["l2_l"], l)
            + w.w1l - yw @ r.T)


def gradient_R(y, l, r, w):
    """Gradient of :func:`objective` with respect to ``R``."""
    y, l, r = as_matrix(y, "Y"), as_matrix(l, "L"), as_matrix(r, "R")
    w = resolve_weights(w, y.shape[0], y.shape[1], l.shape[1])
    w.check_conformable(y, l, r)
    ops = w.ops
    lwl = _sym(ops["w0r"].sandwich(l.T, l))
    yw = ops["w0c"].rmul(ops["w0r"].lmul(y))
    return (ops["w0c"].rmul(lwl @ r) + _l2_apply(ops["l2_r"], r)
            + w.w1r - l.T @ yw)


@dataclass
class QpProblem:
    """``min 1/2 x^T G x + dvec^T x`` subject to ``x >= 0``.

    ``const`` is the constant that makes ``1/2 x^T G x + dvec^T x + const``
    equal the full factorization objective when the problem came from
    :func:`build_qp`; ``const_y`` is the part of it due to ``Y`` alone.
    ``x_shape`` records the matrix shape of the unknown, if any.
    """

    g: np.ndarray
    dvec: np.ndarray
    const: float = 0.0
    const_y: float = 0.0
    x_shape: tuple = None

    def __post_init__(self):
        self.g = as_matrix(self.g, "G")
        self.dvec = np.asarray(self.dvec, dtype=np.float64).ravel()
        k = self.g.shape[0]
        if self.g.shape != (k, k):
            raise ShapeError(f"G must be square, got {self.g.shape}")
        if self.dvec.shape != (k,):
            raise ShapeError(f"d must have length {k}, got {self.dvec.size}")
        if not np.all(np.isfinite(self.dvec)):
            raise ValueError("d contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(self.g))))
        if np.max(np.abs(self.g - self.g.T)) > 1e-12 * scale:
            raise ValidationError("G is not symmetric")
        if np.any(self.g < 0):
            raise ValidationError("G has negative entries")

    @property
    def order(self):
        return self.g.shape[0]

    def objective(self, x):
        """``1/2 x^T G x + d^T x`` (without ``const``)."""
        return float(0.5 * x @ (self.g @ x) + self.dvec @ x)

    def gradient(self, x):
        return self.g @ x + self.dvec


def build_qp(y, l_fixed, r_fixed, side, w, max_order=QP_MAX_ORDER):
    """Assemble the vectorized half-problem for ``side`` ('L' or 'R').

    For ``side='L'`` the unknown is ``vec(L)`` and only ``r_fixed`` enters
    ``G`` and ``d``; for ``side='R'`` only ``l_fixed`` does.  Both factors
    are needed to compute the constant term.

    Raises
    ------
    CapacityError
        If the order of ``G`` exceeds ``max_order``.
    """
    y = as_matrix(y, "Y")
    l_fixed = as_matrix(l_fixed, "L")
    r_fixed = as_matrix(r_fixed, "R")
    w = resolve_weights(w, y.shape[0], y.shape[1], l_fixed.shape[1])
    w.check_conformable(y, l_fixed, r_fixed)
    side = side.upper()
    if side not in ("L", "R"):
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    n, m, d = w.shape
    x_shape = (n, d) if side == "L" else (d, m)
    order = x_shape[0] * x_shape[1]
    if order > max_order:
        raise CapacityError(f"QP order {order} exceeds limit {max_order}")

    ops = w.ops
    yw = ops["w0c"].rmul(ops["w0r"].lmul(y))
    const_y = 0.5 * trace_prod(y, yw)
    if side == "L":
        _warn_rank(r_fixed.T, "R")
        g = kron(_sym(ops["w0c"].sandwich(r_fixed, r_fixed.T)), w.w0r, max_order**2)
        terms = w.l2_terms_l
        dvec = vec(w.w1l) - vec(yw @ r_fixed.T)
        const = const_y + _penalty(w.w1r, ops["l2_r"], r_fixed)
    else:
        _warn_rank(l_fixed, "L")
        g = kron(w.w0c, _sym(ops["w0r"].sandwich(l_fixed.T, l_fixed)), max_order**2)
        terms = w.l2_terms_r
        dvec = vec(w.w1r) - vec(l_fixed.T @ yw)
        const = const_y + _penalty(w.w1l, ops["l2_l"], l_fixed)
    for wr, wc in terms:
        g = g + kron(wc, wr, max_order**2)
    return QpProblem(g=g, dvec=dvec, const=const, const_y=const_y, x_shape=x_shape)


def _warn_rank(m, name):
    # m is tall; full column rank is required for a unique half-step optimum
    if np.linalg.matrix_rank(m, tol=1e-10) < min(m.shape):
        warnings.warn(f"fixed factor {name} is rank deficient", RankWarning, stacklevel=3)
