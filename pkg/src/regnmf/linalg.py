"""Dense linear algebra kernels: Hadamard ops, Kronecker products, vec/unvec.

Matrices are 2-D ``float64`` numpy arrays and vectors are 1-D arrays.
``vec`` stacks columns (column-major order), so that for conformable
matrices::

    vec(B @ C @ D) == kron(D.T, B) @ vec(C)
"""

import numpy as np

from .errors import CapacityError, ShapeError, ZeroDivisorError

#: Largest number of elements ``kron`` will allocate.
KRON_MAX_ELEMENTS = 10**8

_EPS = np.finfo(np.float64).eps


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a finite 2-D float array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(v, name="vector"):
    """Coerce ``v`` to a finite 1-D float array."""
    x = np.asarray(v, dtype=np.float64)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1 or x.size < 1:
        raise ShapeError(f"{name} must be a non-empty 1-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def hadamard(a, b, op="mul"):
    """Elementwise product or quotient of two equally shaped matrices.

    Parameters
    ----------
    a, b : array_like
        Operands of identical shape.
    op : {'mul', 'div'}
        Operation to apply.

    Raises
    ------
    ShapeError
        If the shapes differ.
    ZeroDivisorError
        For ``op='div'`` when some ``|b[i, j]|`` is below machine epsilon.
        The offending index is attached as ``err.index``.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_same_shape(a, b)
    if op == "mul":
        return a * b
    if op == "div":
        small = np.abs(b) < _EPS
        if small.any():
            idx = tuple(int(i) for i in np.argwhere(small)[0])
            raise ZeroDivisorError(f"zero divisor at index {idx}", index=idx)
        return a / b
    raise ValueError(f"unknown op {op!r}; expected 'mul' or 'div'")


def kron(a, b, max_elements=KRON_MAX_ELEMENTS):
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows * cols > max_elements:
        raise CapacityError(
            f"kron result {rows}x{cols} exceeds limit of {max_elements} elements"
        )
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(rows, cols)


def vec(m):
    """Stack the columns of ``m`` into a single vector."""
    m = as_matrix(m)
    return m.reshape(-1, order="F").copy()


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != rows * cols:
        raise ShapeError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F").copy()


def trace_prod(a, b):
    """Return ``tr(a.T @ b)`` without forming the matrix product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    return float(np.sum(a * b))


def offdiag(n):
    """The ``n x n`` matrix of ones with a zero diagonal."""
    return np.ones((n, n)) - np.eye(n)
