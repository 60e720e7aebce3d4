"""
Field Module

Per-rank field storage with halo blocks, element codecs, halo exchange and
portable save/load.
"""

from .element import (
    ComplexElement,
    ElementSpec,
    MatrixElement,
    RawElement,
    RecordElement,
    VectorElement,
)
from .io import FieldHeader, inspect_file, load_field, read_header, save_field
from .field import Field, new_field

__all__ = [
    "ComplexElement",
    "ElementSpec",
    "Field",
    "FieldHeader",
    "MatrixElement",
    "RawElement",
    "RecordElement",
    "VectorElement",
    "inspect_file",
    "load_field",
    "new_field",
    "read_header",
    "save_field",
]
