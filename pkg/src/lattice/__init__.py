"""
Lattice Module

Topology, partitioning, neighbor and halo tables, site cursors and
deterministic per-site random streams.
"""

from .rng import RngStream, splitmix64
from .site import Site
from .topology import slab_partitioner, strided_partitioner, torus
from .lattice import Lattice, LatticeSpec

__all__ = [
    "Lattice",
    "LatticeSpec",
    "RngStream",
    "Site",
    "slab_partitioner",
    "splitmix64",
    "strided_partitioner",
    "torus",
]
