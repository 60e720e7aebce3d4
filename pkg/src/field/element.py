"""
Field Element Codecs

An element spec describes the fixed-size little-endian byte layout of one
field value. The same bytes are used in memory, on the wire and on disk.
Numeric elements also expose a numpy dtype and shape so whole fields can be
viewed as arrays by vectorized kernels.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Tuple

import numpy as np

from src.linalg.matrix import Matrix
from src.shared.errors import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

COMPLEX_LE = np.dtype("<c16")


class ElementSpec(ABC):
    """
    Bijective value <-> bytes map with a fixed encoded size.

    Subclasses provide ``base_dtype`` and ``shape`` (the numpy layout of one
    element) and convert values to and from arrays of that layout.
    """

    base_dtype: np.dtype
    shape: Tuple[int, ...] = ()

    @property
    def byte_size(self) -> int:
        return int(self.base_dtype.itemsize * int(np.prod(self.shape, dtype=np.int64)))

    def encode(self, value: Any) -> bytes:
        data = np.array(self.to_array(value), dtype=self.base_dtype, order="C")
        if data.shape != self.shape:
            raise DimensionError(f"Element must have shape {self.shape}, got {data.shape}")
        return data.tobytes()

    def decode(self, raw: bytes) -> Any:
        if len(raw) != self.byte_size:
            raise ConfigurationError(f"Element needs {self.byte_size} bytes, got {len(raw)}")
        data = np.frombuffer(raw, dtype=self.base_dtype).reshape(self.shape)
        return self.from_array(data.copy())

    def zero(self) -> Any:
        return self.decode(bytes(self.byte_size))

    @abstractmethod
    def to_array(self, value: Any) -> np.ndarray:
        ...

    @abstractmethod
    def from_array(self, data: np.ndarray) -> Any:
        ...


class MatrixElement(ElementSpec):
    """rows x cols complex matrix, row-major, each entry re then im as float64."""

    base_dtype = COMPLEX_LE

    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        self.shape = (rows, cols)

    def to_array(self, value) -> np.ndarray:
        if isinstance(value, Matrix):
            if value.shape != self.shape:
                raise DimensionError(
                    f"Field holds {self.rows}x{self.cols} matrices, got {value.rows}x{value.cols}"
                )
            return value.to_array()
        return np.asarray(value)

    def from_array(self, data: np.ndarray) -> Matrix:
        return Matrix.from_array(data)

    def __repr__(self):
        return f"MatrixElement({self.rows}, {self.cols})"


class ComplexElement(ElementSpec):
    """One complex number."""

    base_dtype = COMPLEX_LE

    def to_array(self, value) -> np.ndarray:
        return np.asarray(complex(value))

    def from_array(self, data: np.ndarray) -> complex:
        return complex(data[()])

    def __repr__(self):
        return "ComplexElement()"


class VectorElement(ElementSpec):
    """Complex vector of fixed length."""

    base_dtype = COMPLEX_LE

    def __init__(self, length: int):
        self.length = length
        self.shape = (length,)

    def to_array(self, value) -> np.ndarray:
        return np.asarray(value)

    def from_array(self, data: np.ndarray) -> np.ndarray:
        return data

    def __repr__(self):
        return f"VectorElement({self.length})"


class RecordElement(ElementSpec):
    """
    User-defined structure described by a numpy structured dtype, e.g.

        RecordElement([("w", "<i4", (10,))])

    Multi-byte fields are stored little-endian whatever the dtype says.
    """

    def __init__(self, dtype):
        self.base_dtype = np.dtype(dtype).newbyteorder("<")
        self.shape = ()

    def to_array(self, value) -> np.ndarray:
        if isinstance(value, np.ndarray):
            return value.astype(self.base_dtype)
        return np.array(value, dtype=self.base_dtype)

    def from_array(self, data: np.ndarray) -> np.void:
        return data[()]

    def __repr__(self):
        return f"RecordElement({self.base_dtype})"


class RawElement(ElementSpec):
    """Opaque fixed-size byte strings."""

    def __init__(self, byte_size: int):
        self.base_dtype = np.dtype(np.uint8)
        self.shape = (byte_size,)

    def to_array(self, value) -> np.ndarray:
        return np.frombuffer(bytes(value), dtype=np.uint8)

    def from_array(self, data: np.ndarray) -> bytes:
        return data.tobytes()

    def __repr__(self):
        return f"RawElement({self.byte_size})"
