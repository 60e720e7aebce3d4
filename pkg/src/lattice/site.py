"""Site cursor with natural neighbor syntax: ``x + 0`` and ``x - 0``."""

from typing import TYPE_CHECKING, Tuple

from src.shared.errors import DomainError

if TYPE_CHECKING:
    from src.lattice.lattice import Lattice
    from src.lattice.rng import RngStream


class Site:
    """A position on a lattice, addressed by canonical global index."""

    __slots__ = ("lattice", "index")

    def __init__(self, lattice: "Lattice", index: int):
        self.lattice = lattice
        self.index = index

    @property
    def coords(self) -> Tuple[int, ...]:
        return self.lattice.coords(self.index)

    def x(self, i: int) -> int:
        """Coordinate ``i`` of this site."""
        if not 0 <= i < self.lattice.ndim:
            raise DomainError(f"Coordinate {i} outside 0..{self.lattice.ndim - 1}")
        return self.coords[i]

    def move(self, mu: int, sign: int) -> "Site":
        """Site one step away in direction ``mu`` (sign +1 or -1)."""
        return Site(self.lattice, self.lattice.neighbor(self.index, mu, sign))

    def __add__(self, mu: int) -> "Site":
        return self.move(mu, +1)

    def __sub__(self, mu: int) -> "Site":
        return self.move(mu, -1)

    def is_local(self) -> bool:
        return self.lattice.is_local(self.index)

    def rng(self) -> "RngStream":
        return self.lattice.site_rng(self.index)

    def __eq__(self, other):
        if not isinstance(other, Site):
            return NotImplemented
        return self.lattice is other.lattice and self.index == other.index

    def __hash__(self):
        return hash((id(self.lattice), self.index))

    def __index__(self):
        return self.index

    def __repr__(self):
        return f"Site({self.index}, coords={self.coords})"
