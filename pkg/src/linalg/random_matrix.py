"""
Random special unitary matrices.

Entries are drawn as complex Gaussians, rows are orthonormalized with modified
Gram-Schmidt and row 0 is rotated by the conjugate determinant phase so the
result has unit determinant.
"""

import logging
from typing import Protocol

import numpy as np

from src.linalg.decompositions import det
from src.linalg.matrix import Matrix
from src.shared.errors import DimensionError

logger = logging.getLogger(__name__)


class GaussianSource(Protocol):
    def gaussian(self) -> float: ...


def random_su(n: int, rng: GaussianSource) -> Matrix:
    """
    Draw an SU(n) matrix from a random stream.

    Args:
        n: Matrix size (>= 1)
        rng: Stream providing standard Gaussians (e.g. an RngStream)

    Returns:
        U with U * hermitian(U) ~ 1 and det(U) ~ 1

    Raises:
        DimensionError: If n < 1
    """
    if n < 1:
        raise DimensionError(f"SU(n) needs n >= 1, got {n}")

    rows = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            re = rng.gaussian()
            im = rng.gaussian()
            rows[i, j] = complex(re, im)

    for i in range(n):
        for j in range(i):
            overlap = np.sum(rows[j].conj() * rows[i])
            rows[i] = rows[i] - overlap * rows[j]
        norm = np.sqrt(np.sum(np.abs(rows[i]) ** 2))
        rows[i] = rows[i] / norm

    u = Matrix.from_array(rows)
    phase = det(u)
    rows[0] = rows[0] * phase.conjugate()
    return Matrix.from_array(rows)
