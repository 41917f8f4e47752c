"""Canonical form and quality metrics for a factorization ``Y ~ L R``."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UndefinedMetricError
from .linalg import as_matrix, trace_prod
from .nmf import FactorPair
from .weights import weighted_sq_error


@dataclass
class CanonicalForm:
    """Rescaled and reordered factors.

    ``factors.l == original.l[:, order] * scale[order]`` and
    ``factors.r == original.r[order] / scale[order, None]``; ``order`` is a
    0-based permutation of the factor indices.
    """

    factors: FactorPair
    scale: np.ndarray
    order: np.ndarray


def canonicalize(f):
    """Give ``R`` unit row sums and sort factors by decreasing column sum of ``L``.

    The product ``L R`` is unchanged.  Rows of ``R`` that sum to zero are
    left unscaled and placed last; ties keep their original order.
    """
    l, r = f.l, f.r
    sums = r.sum(axis=1)
    zero = sums <= 0
    scale = np.where(zero, 1.0, sums)
    l2 = l * scale[None, :]
    r2 = r / scale[:, None]
    colsum = l2.sum(axis=0)
    # primary key: zero-sum rows last; secondary: decreasing L column sum
    order = np.lexsort((-colsum, zero.astype(int)))
    return CanonicalForm(
        factors=FactorPair(l2[:, order], r2[order]),
        scale=scale[order],
        order=order,
    )


def frobenius_error(y, f):
    """``||Y - L R||_F``"""
    y = as_matrix(y, "Y")
    prod = f.l @ f.r
    if prod.shape != y.shape:
        raise ShapeError(f"L R is {prod.shape} but Y is {y.shape}")
    resid = y - prod
    return float(np.sqrt(trace_prod(resid, resid)))


def r_squared(y, f, weights=None):
    """Fraction of variance explained relative to the column-means model.

    ``1 - ||Y - L R||^2 / ||Y - 1 m^T||^2`` with ``m`` the column means of
    ``Y``.  Equals 1 for an exact fit, 0 when ``L R`` is the column-means
    model, and is negative for fits worse than it.  If a
    :class:`~regnmf.weights.WeightConfig` is given, both energies use the
    ``W0R``/``W0C`` weighted norm instead.

    Raises
    ------
    UndefinedMetricError
        If all rows of ``Y`` are identical.
    """
    y = as_matrix(y, "Y")
    prod = f.l @ f.r
    if prod.shape != y.shape:
        raise ShapeError(f"L R is {prod.shape} but Y is {y.shape}")
    resid = y - prod
    base = y - y.mean(axis=0, keepdims=True)
    if weights is None:
        num, den = trace_prod(resid, resid), trace_prod(base, base)
    else:
        num, den = weighted_sq_error(resid, weights), weighted_sq_error(base, weights)
    if den <= 0:
        raise UndefinedMetricError("baseline residual is zero: rows of Y are identical")
    return 1.0 - num / den
