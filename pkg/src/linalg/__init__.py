"""
Linear Algebra

Dense complex matrices with natural syntax, inversion, determinant, matrix
exponential and random SU(n) generation.
"""

from .matrix import (
    I,
    Matrix,
    add,
    conj,
    hermitian,
    identity,
    mul,
    neg,
    sub,
    trace,
    transpose,
    zeros,
)
from .decompositions import det, inv, mexp
from .random_matrix import random_su

__all__ = [
    "I",
    "Matrix",
    "add",
    "conj",
    "det",
    "hermitian",
    "identity",
    "inv",
    "mexp",
    "mul",
    "neg",
    "random_su",
    "sub",
    "trace",
    "transpose",
    "zeros",
]
