"""
Inversion, determinant and matrix exponential.

All routines work on small dense matrices and use deterministic, fixed-order
arithmetic: Gauss-Jordan elimination and LU with partial pivoting (ties go to
the lowest row), and scaling-and-squaring with a Taylor series for ``mexp``.
"""

import logging
import math

import numpy as np

from src.linalg.matrix import Matrix, identity, mul
from src.shared.errors import DimensionError, SingularMatrixError

logger = logging.getLogger(__name__)

# Pivots smaller than this are treated as exact zeros
SINGULAR_PIVOT = 1e-300
# Taylor series stops once an added term is this small (max entry magnitude)
TAYLOR_TOLERANCE = 1e-16
TAYLOR_MAX_TERMS = 100


def _require_square(a: Matrix, op: str):
    if not a.is_square():
        raise DimensionError(f"{op} needs a square matrix, got {a.rows}x{a.cols}")


def _pivot_row(column: np.ndarray, start: int) -> int:
    # np.argmax returns the first maximum, i.e. the lowest row on ties
    return start + int(np.argmax(np.abs(column[start:])))


def inv(a: Matrix) -> Matrix:
    """
    Invert a square matrix by Gauss-Jordan elimination with partial pivoting.

    Args:
        a: Square, nonsingular matrix

    Returns:
        The inverse matrix

    Raises:
        DimensionError: If ``a`` is not square
        SingularMatrixError: If a pivot magnitude drops below 1e-300
    """
    _require_square(a, "inv")
    n = a.rows
    work = a.to_array()
    result = np.eye(n, dtype=np.complex128)

    for col in range(n):
        p = _pivot_row(work[:, col], col)
        pivot = work[p, col]
        if abs(pivot) < SINGULAR_PIVOT:
            raise SingularMatrixError(f"Zero pivot in column {col}")
        if p != col:
            work[[col, p]] = work[[p, col]]
            result[[col, p]] = result[[p, col]]
        work[col] = work[col] / pivot
        result[col] = result[col] / pivot
        for row in range(n):
            if row == col:
                continue
            factor = work[row, col]
            if factor != 0:
                work[row] = work[row] - factor * work[col]
                result[row] = result[row] - factor * result[col]

    return Matrix.from_array(result)


def det(a: Matrix) -> complex:
    """
    Determinant via LU decomposition with partial pivoting.

    A vanishing pivot yields an exact zero determinant.
    """
    _require_square(a, "det")
    n = a.rows
    work = a.to_array()
    value = 1 + 0j

    for col in range(n):
        p = _pivot_row(work[:, col], col)
        pivot = work[p, col]
        if abs(pivot) < SINGULAR_PIVOT:
            return 0j
        if p != col:
            work[[col, p]] = work[[p, col]]
            value = -value
        value *= complex(pivot)
        for row in range(col + 1, n):
            factor = work[row, col] / pivot
            if factor != 0:
                work[row, col:] = work[row, col:] - factor * work[col, col:]

    return value


def _max_row_sum(a: Matrix) -> float:
    if a.rows == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a.to_array()), axis=1)))


def mexp(a: Matrix) -> Matrix:
    """
    Matrix exponential by scaling and squaring.

    The matrix is scaled by 2^-s, where s = max(0, ceil(log2(||a||_inf))),
    exponentiated with a Taylor series (until a term's largest entry drops
    below 1e-16, at most 100 terms) and squared s times.

    Raises:
        DimensionError: If ``a`` is not square
    """
    _require_square(a, "mexp")
    norm = _max_row_sum(a)
    squarings = max(0, math.ceil(math.log2(norm))) if norm > 0 else 0
    scaled = a / (2.0 ** squarings)

    result = identity(a.rows)
    term = identity(a.rows)
    for k in range(1, TAYLOR_MAX_TERMS + 1):
        term = mul(term, scaled) / k
        result = result + term
        if term.max_abs() < TAYLOR_TOLERANCE:
            break
    else:
        logger.debug(f"mexp reached {TAYLOR_MAX_TERMS} Taylor terms")

    for _ in range(squarings):
        result = mul(result, result)
    return result
