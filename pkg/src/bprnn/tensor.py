"""Dense 2-D double-precision tensor arithmetic.

Tensors are plain row-major ``numpy.ndarray`` values of dtype float64 and
rank 2; helpers here enforce that contract and raise toolkit errors
instead of numpy's. All operations are pure functions: inputs are never
mutated, so values can be shared freely across threads.
"""

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

Tensor2D = np.ndarray


def tensor(data):
    """Build a 2-D float64 tensor from nested sequences or an array."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D tensor, got {arr.ndim}-D data")
    if arr.size == 0:
        raise ShapeError("tensor must have at least one element")
    return arr


def ensure_finite(x, context="tensor"):
    """Raise NumericError if any entry is NaN or infinite."""
    if not np.isfinite(x).all():
        raise NumericError(f"non-finite values in {context}")
    return x


def matmul(a, b):
    """Matrix product; shapes (m, k) x (k, n) -> (m, n)."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul shape mismatch: {a.shape[0]}x{a.shape[1]} times "
            f"{b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def elementwise(a, b, op):
    """Pointwise combine two same-shape tensors; op is add, sub or mul."""
    if a.shape != b.shape:
        raise ShapeError(f"elementwise shape mismatch: {a.shape} vs {b.shape}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ParameterError(f"unknown elementwise op {op!r}")


def scale(a, k):
    """Multiply every entry by scalar k."""
    return a * float(k)


def mean(x):
    """Arithmetic mean over all entries."""
    if x.size < 1:
        raise ParameterError("mean of an empty tensor")
    return float(np.mean(x))


def variance(x):
    """Unbiased sample variance (n - 1 denominator) over all entries."""
    if x.size < 2:
        raise ParameterError("variance needs at least 2 elements")
    return float(np.var(x, ddof=1))
