"""
Dense Complex Matrix

A rectangular complex matrix with natural arithmetic syntax:

    A = Matrix.from_rows([[1, I], [3, 1]])
    B = mexp(inv(A)) * hermitian(A + 5)

Scalars added to or subtracted from a matrix stand for scalar times the
identity, so ``A + 5`` requires a square matrix. Matrix products sum the inner
index in increasing order so results are bit-for-bit reproducible on every
rank.
"""

import logging
import numbers
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from src.shared.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

# Imaginary unit
I = 1j

Scalar = Union[int, float, complex, np.number]


def _is_scalar(value) -> bool:
    return isinstance(value, (numbers.Number, np.number))


class Matrix:
    """
    Complex rectangular matrix backed by a row-major complex128 array.

    Matrices resize automatically when assigned with ``assign`` and can be
    resized at will with ``resize``. Arithmetic never mutates operands.
    """

    __slots__ = ("_data",)

    def __init__(self, rows: int = 0, cols: int = 0):
        """
        Create a zero matrix.

        Args:
            rows: Number of rows (>= 0)
            cols: Number of columns (>= 0)
        """
        if rows < 0 or cols < 0:
            raise DimensionError(f"Negative matrix shape {rows}x{cols}")
        self._data = np.zeros((rows, cols), dtype=np.complex128)

    # Construction -------------------------------------------------------

    @classmethod
    def from_array(cls, array) -> "Matrix":
        """Wrap a copy of a 2-D array-like as a Matrix."""
        data = np.array(array, dtype=np.complex128)
        if data.ndim != 2:
            raise DimensionError(f"Expected a 2-D array, got {data.ndim}-D")
        matrix = cls.__new__(cls)
        matrix._data = data
        return matrix

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]]) -> "Matrix":
        """Build a matrix from a list of rows."""
        rows = [list(r) for r in rows]
        if rows and len({len(r) for r in rows}) != 1:
            raise DimensionError("Rows have different lengths")
        if not rows:
            return cls(0, 0)
        return cls.from_array(rows)

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Matrix":
        matrix = cls.__new__(cls)
        matrix._data = data
        return matrix

    # Shape and access ---------------------------------------------------

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._data.shape

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, key: Tuple[int, int]) -> complex:
        i, j = self._check_index(key)
        return complex(self._data[i, j])

    def __setitem__(self, key: Tuple[int, int], value: Scalar):
        i, j = self._check_index(key)
        self._data[i, j] = value

    def _check_index(self, key) -> Tuple[int, int]:
        try:
            i, j = key
        except (TypeError, ValueError):
            raise DomainError(f"Matrix index must be a (row, col) pair, got {key!r}")
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise DomainError(f"Index ({i}, {j}) outside {self.rows}x{self.cols} matrix")
        return i, j

    def assign(self, other: "Matrix") -> "Matrix":
        """Overwrite this matrix with a copy of ``other``, taking its shape."""
        self._data = np.array(_as_matrix(other)._data, copy=True)
        return self

    def resize(self, rows: int, cols: int) -> "Matrix":
        """Change shape in place; all entries become zero."""
        if rows < 0 or cols < 0:
            raise DimensionError(f"Negative matrix shape {rows}x{cols}")
        self._data = np.zeros((rows, cols), dtype=np.complex128)
        return self

    def copy(self) -> "Matrix":
        return Matrix._wrap(self._data.copy())

    def to_array(self) -> np.ndarray:
        """Return a copy of the entries as a complex128 ndarray."""
        return self._data.copy()

    def entries(self) -> Iterable[complex]:
        """Entries in row-major order."""
        return (complex(z) for z in self._data.ravel())

    def max_abs(self) -> float:
        """Largest entry magnitude (0 for an empty matrix)."""
        if self._data.size == 0:
            return 0.0
        return float(np.max(np.abs(self._data)))

    # Arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(self._data + complex(other) * _identity_like(self))
        other = _as_matrix(other)
        _require_same_shape(self, other, "add")
        return Matrix._wrap(self._data + other._data)

    def __radd__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(complex(other) * _identity_like(self) + self._data)
        return NotImplemented

    def __sub__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(self._data - complex(other) * _identity_like(self))
        other = _as_matrix(other)
        _require_same_shape(self, other, "sub")
        return Matrix._wrap(self._data - other._data)

    def __rsub__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(complex(other) * _identity_like(self) - self._data)
        return NotImplemented

    def __neg__(self):
        return Matrix._wrap(-self._data)

    def __pos__(self):
        return self.copy()

    def __mul__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(self._data * other)
        return mul(self, _as_matrix(other))

    def __rmul__(self, other):
        if _is_scalar(other):
            return Matrix._wrap(other * self._data)
        return NotImplemented

    def __truediv__(self, other):
        if not _is_scalar(other):
            return NotImplemented
        return Matrix._wrap(self._data / other)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    __hash__ = None

    def __repr__(self):
        rows = ", ".join(
            "[" + ", ".join(_format_complex(z) for z in row) + "]"
            for row in self._data
        )
        return f"Matrix([{rows}])"


def _format_complex(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}i"


def _as_matrix(value) -> Matrix:
    if isinstance(value, Matrix):
        return value
    raise TypeError(f"Expected Matrix, got {type(value).__name__}")


def _identity_like(m: Matrix) -> np.ndarray:
    if not m.is_square():
        raise DimensionError(
            f"Scalar shift needs a square matrix, got {m.rows}x{m.cols}"
        )
    return np.eye(m.rows, dtype=np.complex128)


def _require_same_shape(a: Matrix, b: Matrix, op: str):
    if a.shape != b.shape:
        raise DimensionError(
            f"Cannot {op} {a.rows}x{a.cols} and {b.rows}x{b.cols} matrices"
        )


def identity(n: int) -> Matrix:
    """n x n identity matrix."""
    if n < 0:
        raise DimensionError(f"Negative identity size {n}")
    return Matrix._wrap(np.eye(n, dtype=np.complex128))


def zeros(rows: int, cols: int) -> Matrix:
    return Matrix(rows, cols)


def add(a: Matrix, b: Matrix) -> Matrix:
    return a + b


def sub(a: Matrix, b: Matrix) -> Matrix:
    return a - b


def neg(a: Matrix) -> Matrix:
    return -a


def mul(a: Matrix, b: Matrix) -> Matrix:
    """
    Matrix product with the inner index summed in increasing order.

    Raises:
        DimensionError: If a.cols != b.rows
    """
    if a.cols != b.rows:
        raise DimensionError(
            f"Cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}"
        )
    xr, xi = a._data.real, a._data.imag
    yr, yi = b._data.real, b._data.imag
    re = np.zeros((a.rows, b.cols), dtype=np.float64)
    im = np.zeros((a.rows, b.cols), dtype=np.float64)
    # Real arithmetic only: every partial product is rounded on its own
    for k in range(a.cols):
        ar, ai = xr[:, k, None], xi[:, k, None]
        br, bi = yr[None, k, :], yi[None, k, :]
        re += ar * br - ai * bi
        im += ar * bi + ai * br
    out = np.empty((a.rows, b.cols), dtype=np.complex128)
    out.real, out.imag = re, im
    return Matrix._wrap(out)


def hermitian(a: Matrix) -> Matrix:
    """Conjugate transpose."""
    return Matrix._wrap(np.ascontiguousarray(a._data.conj().T))


def transpose(a: Matrix) -> Matrix:
    return Matrix._wrap(np.ascontiguousarray(a._data.T))


def conj(a: Matrix) -> Matrix:
    return Matrix._wrap(a._data.conj())


def trace(a: Matrix) -> complex:
    if not a.is_square():
        raise DimensionError(f"Trace needs a square matrix, got {a.rows}x{a.cols}")
    total = 0j
    for i in range(a.rows):
        total += complex(a._data[i, i])
    return total
