"""
Topology and partitioning functions.

A topology maps coordinates to the coordinates reached by one step in
direction ``mu`` with sign +1/-1. It receives either one coordinate vector
(shape ``(ndim,)``) or a stack of them (shape ``(n, ndim)``) and must return an
array of the same shape.

A partitioner maps global site indices to ranks. It receives an integer ndarray
of indices together with the lattice volume and the rank count and returns an
integer ndarray of ranks.
"""

from typing import Callable, Sequence

import numpy as np

Topology = Callable[[np.ndarray, int, int, Sequence[int]], np.ndarray]
Partitioner = Callable[[np.ndarray, int, int], np.ndarray]


def torus(coords: np.ndarray, mu: int, sign: int, dims: Sequence[int]) -> np.ndarray:
    """Periodic boundaries: x_mu + L_mu = x_mu."""
    moved = np.array(coords, dtype=np.int64, copy=True)
    moved[..., mu] = (moved[..., mu] + sign) % dims[mu]
    return moved


def slab_partitioner(indices: np.ndarray, volume: int, nranks: int) -> np.ndarray:
    """
    Contiguous lexicographic slabs.

    Rank r owns global indices [floor(r*V/P), floor((r+1)*V/P)).
    """
    indices = np.asarray(indices, dtype=np.int64)
    return ((indices + 1) * nranks - 1) // volume


def strided_partitioner(indices: np.ndarray, volume: int, nranks: int) -> np.ndarray:
    """Round-robin assignment (index mod nranks); rank blocks are not contiguous."""
    return np.asarray(indices, dtype=np.int64) % nranks
