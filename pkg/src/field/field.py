"""
Distributed Field

A Field stores one element per lattice site, spread over the ranks. Each rank
keeps a single contiguous byte region:

    [ local block | halo block of peer p0 | halo block of peer p1 | ... ]

The local block holds the owned sites in canonical order; each halo block holds
read-only copies of one peer's sites, in that peer's send-list order, with
peers in ascending rank order. Because the sites shared with a peer are
contiguous, ``update()`` exchanges them with one message per peer and
receives straight into the halo block.
"""

import logging
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from src.field.element import ElementSpec
from src.field.io import load_field, save_field
from src.lattice.lattice import Lattice
from src.lattice.site import Site
from src.shared.errors import ConfigurationError, DomainError, LocalityError
from src.transport.collectives import gather
from src.transport.endpoint import TransportEndpoint
from src.transport.plan import execute_plan, make_plan

logger = logging.getLogger(__name__)

SiteRef = Union[Site, int]


class Field:
    """
    One rank's share of a lattice field.

    Values are read with ``get``/``field[x]`` and written with
    ``set``/``field[x] = v``; only owned sites may be written.
    """

    def __init__(self, lattice: Lattice, element: ElementSpec):
        """
        Allocate zeroed storage for the local and halo sites.

        Args:
            lattice: Lattice built for this rank
            element: Codec of one site value

        Raises:
            ConfigurationError: If the element encodes to zero bytes
        """
        if element.byte_size <= 0:
            raise ConfigurationError(f"Element byte size must be positive, got {element.byte_size}")
        self.lattice = lattice
        self.element = element
        self.element_size = element.byte_size

        self.n_local = len(lattice.local_sites)
        self._slots = np.full(lattice.volume, -1, dtype=np.int64)
        self._slots[lattice.local_sites] = np.arange(self.n_local, dtype=np.int64)

        self._halo_ranges: Dict[int, Tuple[int, int]] = {}
        offset = self.n_local
        for peer in sorted(lattice.halo_lists):
            sites = lattice.halo_lists[peer]
            self._slots[sites] = np.arange(offset, offset + len(sites), dtype=np.int64)
            self._halo_ranges[peer] = (offset, offset + len(sites))
            offset += len(sites)
        for peer in lattice.overlapping_peers:
            self._halo_ranges.setdefault(peer, (offset, offset))
        self.n_slots = offset

        self._send_slots = {
            peer: self._slots[sites] for peer, sites in lattice.send_lists.items()
        }
        self._plan = make_plan(lattice.rank, lattice.overlapping_peers)

        self.storage = np.zeros(self.n_slots * self.element_size, dtype=np.uint8)
        self._rows = self.storage.reshape(self.n_slots, self.element_size)

        logger.debug(
            f"Field {element!r} on rank {lattice.rank}: {self.n_local} local + "
            f"{self.n_slots - self.n_local} halo slots"
        )

    # Layout -------------------------------------------------------------

    @property
    def plan(self):
        return self._plan

    def slot_of(self, site: SiteRef) -> int:
        """
        Storage slot of a local or halo site.

        Raises:
            LocalityError: If this rank holds no copy of the site
        """
        index = self._index(site)
        slot = int(self._slots[index])
        if slot < 0:
            raise LocalityError(
                f"Site {index} is neither local nor halo on rank {self.lattice.rank}"
            )
        return slot

    def slots_of(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized ``slot_of`` for an array of global indices."""
        slots = self._slots[np.asarray(indices, dtype=np.int64)]
        if np.any(slots < 0):
            raise LocalityError(f"Some sites are not held on rank {self.lattice.rank}")
        return slots

    def halo_range(self, peer: int) -> Tuple[int, int]:
        """Slot range [start, stop) of the halo block of ``peer``."""
        return self._halo_ranges[peer]

    def halo_block(self, peer: int) -> np.ndarray:
        """Byte view of the halo block of ``peer``."""
        start, stop = self._halo_ranges[peer]
        return self.storage[start * self.element_size:stop * self.element_size]

    def local_block(self) -> np.ndarray:
        """Byte view of the owned sites, in canonical order."""
        return self.storage[:self.n_local * self.element_size]

    def array(self) -> np.ndarray:
        """Typed view of all slots, shape (n_slots,) + element shape."""
        return self.storage.view(self.element.base_dtype).reshape(
            (self.n_slots,) + tuple(self.element.shape)
        )

    def local_array(self) -> np.ndarray:
        return self.array()[:self.n_local]

    # Access -------------------------------------------------------------

    def _index(self, site: SiteRef) -> int:
        if isinstance(site, Site):
            if site.lattice is not self.lattice:
                raise LocalityError("Site belongs to a different lattice")
            return site.index
        index = int(site)
        if not 0 <= index < self.lattice.volume:
            raise DomainError(f"Site index {index} outside 0..{self.lattice.volume - 1}")
        return index

    def get(self, site: SiteRef) -> Any:
        return self.element.decode(self._rows[self.slot_of(site)].tobytes())

    def get_bytes(self, site: SiteRef) -> bytes:
        return self._rows[self.slot_of(site)].tobytes()

    def set(self, site: SiteRef, value: Any):
        """
        Raises:
            LocalityError: If the site is not owned by this rank
        """
        slot = self.slot_of(site)
        if slot >= self.n_local:
            raise LocalityError(
                f"Site {self._index(site)} is a halo copy on rank {self.lattice.rank}; only owners write"
            )
        self._rows[slot] = np.frombuffer(self.element.encode(value), dtype=np.uint8)

    def __getitem__(self, site: SiteRef) -> Any:
        return self.get(site)

    def __setitem__(self, site: SiteRef, value: Any):
        self.set(site, value)

    def fill(self, value: Any):
        """Set every owned site to ``value``."""
        encoded = np.frombuffer(self.element.encode(value), dtype=np.uint8)
        self._rows[:self.n_local] = encoded

    # Communication ------------------------------------------------------

    def _check_endpoint(self, endpoint: TransportEndpoint):
        spec = self.lattice.spec
        if endpoint.rank != self.lattice.rank or endpoint.nranks != spec.nranks:
            raise ConfigurationError(
                f"Endpoint rank {endpoint.rank}/{endpoint.nranks} does not match "
                f"lattice rank {self.lattice.rank}/{spec.nranks}"
            )

    def update(self, endpoint: TransportEndpoint):
        """
        Refresh every halo block from the owning ranks.

        One message is sent to and one received from each overlapping peer.
        The sender gathers its send-list sites into a temporary buffer; the
        receiver writes the bytes straight into its halo block.

        Raises:
            ProtocolError: If a peer's message has the wrong length
        """
        self._check_endpoint(endpoint)

        def outgoing(peer: int) -> bytes:
            slots = self._send_slots.get(peer)
            if slots is None:
                return b""
            return self._rows[slots].tobytes()

        def receive(peer: int):
            endpoint.recv_into(peer, self.halo_block(peer))

        execute_plan(endpoint, self._plan, outgoing, receive)

    def gather(self, endpoint: TransportEndpoint) -> Optional[bytes]:
        """
        Collect the whole field on rank 0 in canonical order.

        Returns:
            V * element_size bytes on rank 0, None elsewhere
        """
        self._check_endpoint(endpoint)
        blocks = gather(endpoint, self.local_block().tobytes())
        if blocks is None:
            return None
        owner = self.lattice.owner
        full = np.zeros((self.lattice.volume, self.element_size), dtype=np.uint8)
        for rank, block in enumerate(blocks):
            sites = np.flatnonzero(owner == rank)
            full[sites] = np.frombuffer(block, dtype=np.uint8).reshape(len(sites), self.element_size)
        return full.tobytes()

    def save(self, path, endpoint: TransportEndpoint):
        """Collectively write the field to ``path``."""
        save_field(self, path, endpoint)

    def load(self, path, endpoint: TransportEndpoint):
        """Collectively read owned sites from ``path``; halos need update()."""
        load_field(self, path, endpoint)

    def __repr__(self):
        return (
            f"Field({self.element!r}, rank={self.lattice.rank}, local={self.n_local}, "
            f"halo={self.n_slots - self.n_local})"
        )


def new_field(lattice: Lattice, element: ElementSpec) -> Field:
    return Field(lattice, element)
