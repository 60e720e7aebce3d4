"""
Lattice Construction

A Lattice is an immutable container of topology and partitioning tables for
one rank: canonical index <-> coordinate maps, the owner of every site, up and
down neighbor tables, the sites this rank owns, and for every overlapping peer
the sorted list of sites to receive (halo list) and to send (send list).

Every rank can evaluate the partitioner for every site, so both halo and send
lists are computed locally without communication.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from src.lattice.rng import RngStream
from src.lattice.site import Site
from src.lattice.topology import Partitioner, Topology, slab_partitioner, torus
from src.shared.errors import ConfigurationError, DomainError
from src.shared.settings import GlobalSettings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatticeSpec:
    """
    Everything needed to build identical lattices on every rank.

    Attributes:
        dims: Extents L_mu of each direction (ndim = len(dims))
        nranks: Number of ranks the sites are partitioned over
        seed: 64-bit seed for the per-site random streams
        topology: Neighbor function, torus by default
        partitioner: Owner function, contiguous slabs by default
    """
    dims: Tuple[int, ...]
    nranks: int = 1
    seed: int = 0
    topology: Topology = field(default=torus, compare=False)
    partitioner: Partitioner = field(default=slab_partitioner, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def volume(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 0

    def validate(self):
        """
        Raises:
            ConfigurationError: If the spec cannot describe a lattice
        """
        max_ndim = GlobalSettings.LatticeLimits.MAX_NDIM
        if not 1 <= self.ndim <= max_ndim:
            raise ConfigurationError(
                f"Lattice must have 1..{max_ndim} dimensions, got {self.ndim}"
            )
        if any(d < 1 for d in self.dims):
            raise ConfigurationError(f"All extents must be >= 1, got {self.dims}")
        if self.nranks < 1:
            raise ConfigurationError(f"nranks must be >= 1, got {self.nranks}")
        if self.nranks > self.volume:
            raise ConfigurationError(
                f"nranks={self.nranks} exceeds lattice volume {self.volume}"
            )
        if not 0 <= self.seed <= 0xFFFFFFFFFFFFFFFF:
            raise ConfigurationError(f"Seed must be a 64-bit unsigned value, got {self.seed}")


class Lattice:
    """
    Topology and partitioning tables of one rank.

    Build with ``Lattice.build(spec, rank)``; instances are read-only and can
    be shared between threads.
    """

    def __init__(self, spec: LatticeSpec, rank: int):
        spec.validate()
        if not 0 <= rank < spec.nranks:
            raise ConfigurationError(f"Rank {rank} outside 0..{spec.nranks - 1}")

        self.spec = spec
        self.rank = rank
        self.dims = spec.dims
        self.ndim = spec.ndim
        self.volume = spec.volume

        all_sites = np.arange(self.volume, dtype=np.int64)
        self._coords = np.stack(np.unravel_index(all_sites, self.dims), axis=1).astype(np.int64)
        self.owner = self._build_owner(all_sites)
        self.up, self.down = self._build_neighbors()
        self.local_sites = np.flatnonzero(self.owner == rank).astype(np.int64)
        self.halo_lists, self.send_lists = self._build_exchange_lists()
        self.overlapping_peers: List[int] = sorted(
            set(self.halo_lists) | set(self.send_lists)
        )

        for table in (self._coords, self.owner, self.up, self.down, self.local_sites):
            table.setflags(write=False)
        for lists in (self.halo_lists, self.send_lists):
            for sites in lists.values():
                sites.setflags(write=False)

        logger.info(
            f"Lattice {self.dims} rank {rank}/{spec.nranks}: "
            f"{len(self.local_sites)} local sites, "
            f"{sum(len(s) for s in self.halo_lists.values())} halo sites, "
            f"peers {self.overlapping_peers}"
        )

    @classmethod
    def build(cls, spec: LatticeSpec, rank: int) -> "Lattice":
        return cls(spec, rank)

    # Table construction -------------------------------------------------

    def _build_owner(self, all_sites: np.ndarray) -> np.ndarray:
        owner = np.asarray(
            self.spec.partitioner(all_sites, self.volume, self.spec.nranks),
            dtype=np.int64,
        )
        if owner.shape != all_sites.shape:
            raise ConfigurationError("Partitioner must return one rank per site")
        if owner.size and (owner.min() < 0 or owner.max() >= self.spec.nranks):
            raise ConfigurationError("Partitioner returned a rank outside 0..nranks-1")
        return owner

    def _build_neighbors(self) -> Tuple[np.ndarray, np.ndarray]:
        up = np.empty((self.volume, self.ndim), dtype=np.int64)
        down = np.empty((self.volume, self.ndim), dtype=np.int64)
        for mu in range(self.ndim):
            up[:, mu] = self._apply_topology(mu, +1)
            down[:, mu] = self._apply_topology(mu, -1)
        return up, down

    def _apply_topology(self, mu: int, sign: int) -> np.ndarray:
        moved = np.asarray(self.spec.topology(self._coords, mu, sign, self.dims), dtype=np.int64)
        if moved.shape != self._coords.shape:
            raise ConfigurationError("Topology must return one coordinate vector per site")
        if np.any(moved < 0) or np.any(moved >= np.asarray(self.dims)):
            raise ConfigurationError(f"Topology produced out-of-range coordinates (mu={mu}, sign={sign})")
        return np.ravel_multi_index(tuple(moved.T), self.dims)

    def _build_exchange_lists(self) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
        neighbors = np.concatenate([self.up, self.down], axis=1)
        reader = np.broadcast_to(self.owner[:, None], neighbors.shape)
        holder = self.owner[neighbors]
        remote = reader != holder

        # Sites this rank reads, grouped by the peer that owns them
        halo_mask = remote & (reader == self.rank)
        halo_lists = self._group_by_peer(holder[halo_mask], neighbors[halo_mask])

        # Owned sites each peer reads
        send_mask = remote & (holder == self.rank)
        send_lists = self._group_by_peer(reader[send_mask], neighbors[send_mask])
        return halo_lists, send_lists

    def _group_by_peer(self, peers: np.ndarray, sites: np.ndarray) -> Dict[int, np.ndarray]:
        keys = np.unique(peers * self.volume + sites)
        key_peers = keys // self.volume
        key_sites = keys % self.volume
        grouped: Dict[int, np.ndarray] = {}
        for peer in np.unique(key_peers):
            grouped[int(peer)] = key_sites[key_peers == peer]
        return grouped

    # Index maps ---------------------------------------------------------

    def global_index(self, coords: Sequence[int]) -> int:
        """
        Canonical index, lexicographic with coordinate 0 slowest.

        Raises:
            DomainError: If a coordinate is out of range
        """
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.ndim:
            raise DomainError(f"Expected {self.ndim} coordinates, got {len(coords)}")
        index = 0
        for c, extent in zip(coords, self.dims):
            if not 0 <= c < extent:
                raise DomainError(f"Coordinate {coords} outside lattice {self.dims}")
            index = index * extent + c
        return index

    def coords(self, index: int) -> Tuple[int, ...]:
        self._check_index(index)
        return tuple(int(c) for c in self._coords[index])

    def coordinate_table(self) -> np.ndarray:
        """Read-only (V, ndim) array of coordinates in canonical order."""
        return self._coords

    def _check_index(self, index: int):
        if not 0 <= index < self.volume:
            raise DomainError(f"Site index {index} outside 0..{self.volume - 1}")

    def _check_direction(self, mu: int):
        if not 0 <= mu < self.ndim:
            raise DomainError(f"Direction {mu} outside 0..{self.ndim - 1}")

    # Queries ------------------------------------------------------------

    def neighbor(self, index: int, mu: int, sign: int) -> int:
        """Global index one step from ``index`` in direction ``mu``."""
        self._check_index(index)
        self._check_direction(mu)
        if sign == +1:
            return int(self.up[index, mu])
        if sign == -1:
            return int(self.down[index, mu])
        raise DomainError(f"Sign must be +1 or -1, got {sign}")

    def owner_of(self, index: int) -> int:
        self._check_index(index)
        return int(self.owner[index])

    def is_local(self, index: int) -> bool:
        return self.owner_of(index) == self.rank

    def site(self, where: Union[int, Sequence[int]]) -> Site:
        """Site from a global index or a coordinate tuple."""
        if isinstance(where, (int, np.integer)):
            self._check_index(int(where))
            return Site(self, int(where))
        return Site(self, self.global_index(where))

    def sites(self) -> Iterator[Site]:
        """Local sites in canonical order."""
        for index in self.local_sites:
            yield Site(self, int(index))

    def site_rng(self, index: int) -> RngStream:
        """Fresh random stream of global site ``index``."""
        self._check_index(index)
        return RngStream.for_site(self.spec.seed, index)

    def __repr__(self):
        return (
            f"Lattice(dims={self.dims}, rank={self.rank}, nranks={self.spec.nranks}, "
            f"local={len(self.local_sites)}, peers={self.overlapping_peers})"
        )
