"""
Field File Format and Collective Save/Load

File layout, all little-endian:

    "LFLD" | u32 version=1 | u32 ndim | ndim x u32 dims | u32 element size
    | u64 site count V | V elements in canonical order

Rank 0 does all file I/O. On save it requests each rank's local block in rank
order; on load it reads and scatters. Every message from rank 0 to a worker
starts with a one-byte status so a failure on rank 0 reaches every rank instead
of leaving them blocked.
"""

import logging
import os
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, BinaryIO, List, Optional, Tuple, Union

import numpy as np

from src.shared.errors import FieldFileError, FieldFormatError, ProtocolError
from src.shared.settings import GlobalSettings
from src.transport.endpoint import TransportEndpoint

if TYPE_CHECKING:
    from src.field.field import Field

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

_PREFIX = struct.Struct("<4sII")
_U32 = struct.Struct("<I")
_TAIL = struct.Struct("<IQ")

STATUS_OK = 0
STATUS_FORMAT_ERROR = 1
STATUS_FILE_ERROR = 2


@dataclass(frozen=True)
class FieldHeader:
    version: int
    dims: Tuple[int, ...]
    element_size: int
    site_count: int

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return _PREFIX.size + _U32.size * self.ndim + _TAIL.size

    @property
    def payload_size(self) -> int:
        return self.site_count * self.element_size

    def pack(self) -> bytes:
        return (
            _PREFIX.pack(GlobalSettings.FieldFileSettings.MAGIC, self.version, self.ndim)
            + b"".join(_U32.pack(d) for d in self.dims)
            + _TAIL.pack(self.element_size, self.site_count)
        )

    def summary(self) -> str:
        dims = ",".join(str(d) for d in self.dims)
        return f"ndim={self.ndim} dims={dims} elem={self.element_size}B sites={self.site_count}"


def header_for(field: "Field") -> FieldHeader:
    lattice = field.lattice
    return FieldHeader(
        version=GlobalSettings.FieldFileSettings.VERSION,
        dims=tuple(lattice.dims),
        element_size=field.element_size,
        site_count=lattice.volume,
    )


def _read_exact(fh: BinaryIO, size: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise FieldFormatError(f"Truncated file: expected {size} bytes of {what}, got {len(data)}")
    return data


def read_header(fh: BinaryIO) -> FieldHeader:
    """
    Parse and check a header from an open binary file.

    Raises:
        FieldFormatError: Bad magic or version, inconsistent counts, or a file
            whose length does not match the header
    """
    settings = GlobalSettings.FieldFileSettings
    magic, version, ndim = _PREFIX.unpack(_read_exact(fh, _PREFIX.size, "header"))
    if magic != settings.MAGIC:
        raise FieldFormatError(f"Bad magic {magic!r}, expected {settings.MAGIC!r}")
    if version != settings.VERSION:
        raise FieldFormatError(f"Unsupported version {version}, expected {settings.VERSION}")
    if not 1 <= ndim <= GlobalSettings.LatticeLimits.MAX_NDIM:
        raise FieldFormatError(f"Invalid ndim {ndim}")
    dims = tuple(_U32.unpack(_read_exact(fh, _U32.size, "dims"))[0] for _ in range(ndim))
    element_size, site_count = _TAIL.unpack(_read_exact(fh, _TAIL.size, "header"))
    header = FieldHeader(version, dims, element_size, site_count)

    if element_size == 0:
        raise FieldFormatError("Element size is zero")
    if site_count != int(np.prod(dims, dtype=np.int64)):
        raise FieldFormatError(f"Site count {site_count} does not match dims {dims}")

    here = fh.tell()
    fh.seek(0, os.SEEK_END)
    actual = fh.tell() - here
    fh.seek(here)
    if actual < header.payload_size:
        raise FieldFormatError(
            f"Truncated file: payload has {actual} bytes, header announces {header.payload_size}"
        )
    if actual > header.payload_size:
        raise FieldFormatError(f"File has {actual - header.payload_size} trailing bytes")
    return header


def inspect_file(path: PathLike) -> FieldHeader:
    """
    Read and validate the header of a field file.

    Raises:
        FieldFormatError: Malformed file
        FieldFileError: File cannot be opened
    """
    try:
        with open(path, "rb") as fh:
            return read_header(fh)
    except OSError as e:
        raise FieldFileError(f"Cannot read {path}: {e}")


def _check_compatible(header: FieldHeader, field: "Field"):
    if header.dims != tuple(field.lattice.dims):
        raise FieldFormatError(f"File dims {header.dims} differ from lattice dims {field.lattice.dims}")
    if header.element_size != field.element_size:
        raise FieldFormatError(
            f"File element size {header.element_size} differs from field element size {field.element_size}"
        )


def _rank_sites(field: "Field") -> List[np.ndarray]:
    owner = field.lattice.owner
    return [np.flatnonzero(owner == r) for r in range(field.lattice.spec.nranks)]


def _is_contiguous(sites: np.ndarray) -> bool:
    return len(sites) == 0 or int(sites[-1]) - int(sites[0]) + 1 == len(sites)


# Status messages ----------------------------------------------------------

def _status(code: int, message: str = "") -> bytes:
    return bytes([code]) + message.encode("utf-8")


def _raise_for_status(message: bytes):
    if not message:
        raise ProtocolError("Empty status message from rank 0")
    code, text = message[0], message[1:].decode("utf-8", errors="replace")
    if code == STATUS_FORMAT_ERROR:
        raise FieldFormatError(f"Rank 0 reported: {text}")
    if code == STATUS_FILE_ERROR:
        raise FieldFileError(f"Rank 0 reported: {text}")
    if code != STATUS_OK:
        raise ProtocolError(f"Unknown status code {code} from rank 0")


def _status_for(error: Exception) -> bytes:
    code = STATUS_FORMAT_ERROR if isinstance(error, FieldFormatError) else STATUS_FILE_ERROR
    return _status(code, str(error))


# Save ---------------------------------------------------------------------

def save_field(field: "Field", path: PathLike, endpoint: TransportEndpoint):
    """
    Collectively write the field to ``path`` (every rank must call this).

    Raises:
        FieldFileError: If rank 0 cannot write the file (raised on all ranks)
        ProtocolError: On rank 0 if a rank sends a block of the wrong size;
            the other ranks raise FieldFileError
    """
    field._check_endpoint(endpoint)
    if endpoint.rank != 0:
        _raise_for_status(endpoint.recv(0))
        endpoint.send(0, field.local_block().tobytes())
        _raise_for_status(endpoint.recv(0))
        return

    header = header_for(field)
    nranks = endpoint.nranks
    fh = None
    try:
        fh = open(path, "wb")
        fh.write(header.pack())
    except OSError as e:
        if fh is not None:
            fh.close()
        failure = FieldFileError(f"Cannot write {path}: {e}")
        for peer in range(1, nranks):
            endpoint.send(peer, _status_for(failure))
        raise failure

    rank_sites = _rank_sites(field)
    streaming = all(_is_contiguous(s) for s in rank_sites)
    payload = None if streaming else np.zeros((header.site_count, field.element_size), dtype=np.uint8)
    failure: Optional[Exception] = None

    with fh:
        for rank, sites in enumerate(rank_sites):
            if rank == 0:
                block = field.local_block().tobytes()
            else:
                endpoint.send(rank, _status(STATUS_OK))
                block = endpoint.recv(rank)
                if len(block) != len(sites) * field.element_size:
                    # Ranks not yet served take the error as their first status
                    failure = ProtocolError(
                        f"Rank {rank} sent {len(block)} bytes, expected {len(sites) * field.element_size}"
                    )
                    break
            if failure is not None or len(sites) == 0:
                continue
            try:
                if streaming:
                    fh.seek(header.size + int(sites[0]) * field.element_size)
                    fh.write(block)
                else:
                    payload[sites] = np.frombuffer(block, dtype=np.uint8).reshape(len(sites), field.element_size)
            except OSError as e:
                failure = FieldFileError(f"Cannot write {path}: {e}")
        if failure is None and payload is not None:
            try:
                fh.write(payload.tobytes())
            except OSError as e:
                failure = FieldFileError(f"Cannot write {path}: {e}")

    final = _status(STATUS_OK) if failure is None else _status_for(failure)
    for peer in range(1, nranks):
        endpoint.send(peer, final)
    if failure is not None:
        raise failure
    logger.info(f"Saved field {header.summary()} to {path}")


# Load ---------------------------------------------------------------------

def load_field(field: "Field", path: PathLike, endpoint: TransportEndpoint):
    """
    Collectively read ``path`` into the owned sites of every rank.

    Halo blocks are left untouched; call ``update()`` afterwards.

    Raises:
        FieldFormatError: Bad or incompatible file (raised on all ranks)
        FieldFileError: File cannot be read (raised on all ranks)
    """
    field._check_endpoint(endpoint)
    if endpoint.rank != 0:
        message = endpoint.recv(0)
        _raise_for_status(message)
        block = message[1:]
        if len(block) != field.n_local * field.element_size:
            raise ProtocolError(
                f"Rank 0 sent {len(block)} bytes, expected {field.n_local * field.element_size}"
            )
        field.local_block()[:] = np.frombuffer(block, dtype=np.uint8)
        return

    nranks = endpoint.nranks
    served = 0
    try:
        try:
            fh = open(path, "rb")
        except OSError as e:
            raise FieldFileError(f"Cannot read {path}: {e}")
        with fh:
            header = read_header(fh)
            _check_compatible(header, field)
            rank_sites = _rank_sites(field)
            payload = None
            if not all(_is_contiguous(s) for s in rank_sites):
                payload = np.frombuffer(
                    _read_exact(fh, header.payload_size, "payload"), dtype=np.uint8
                ).reshape(header.site_count, field.element_size)

            for rank, sites in enumerate(rank_sites):
                if payload is not None:
                    block = payload[sites].tobytes()
                elif len(sites) == 0:
                    block = b""
                else:
                    try:
                        fh.seek(header.size + int(sites[0]) * field.element_size)
                    except OSError as e:
                        raise FieldFileError(f"Cannot read {path}: {e}")
                    block = _read_exact(fh, len(sites) * field.element_size, "payload")
                if rank == 0:
                    field.local_block()[:] = np.frombuffer(block, dtype=np.uint8)
                else:
                    endpoint.send(rank, _status(STATUS_OK) + block)
                served = rank + 1
    except (FieldFormatError, FieldFileError) as e:
        for peer in range(max(served, 1), nranks):
            endpoint.send(peer, _status_for(e))
        raise
    logger.info(f"Loaded field {header.summary()} from {path}")
