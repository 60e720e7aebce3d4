"""
Transport Endpoint Base

Reliable, ordered, point-to-point byte messaging between ranks. Every message
travels as one frame: an unsigned 64-bit little-endian byte count followed by
the payload. Backends only move frames between a fixed ordered pair of ranks;
validation, framing and the barrier live here.
"""

import logging
import struct
from abc import ABC, abstractmethod
from enum import Enum

from src.shared.errors import ConfigurationError, ProtocolError, TransportConnectionError
from src.shared.settings import GlobalSettings

logger = logging.getLogger(__name__)

FRAME_HEADER = struct.Struct("<Q")
BARRIER_TOKEN = struct.Struct("<Q")


class Backend(str, Enum):
    INPROC = "inproc"
    TCP = "tcp"


def encode_frame_header(length: int) -> bytes:
    return FRAME_HEADER.pack(length)


def decode_frame_header(header: bytes) -> int:
    """
    Raises:
        ProtocolError: If the header is short or announces an absurd length
    """
    if len(header) != FRAME_HEADER.size:
        raise ProtocolError(f"Frame header must be {FRAME_HEADER.size} bytes, got {len(header)}")
    (length,) = FRAME_HEADER.unpack(header)
    if length > GlobalSettings.TransportSettings.MAX_FRAME_BYTES:
        raise ProtocolError(f"Frame length {length} exceeds limit")
    return length


class TransportEndpoint(ABC):
    """
    One rank's connection to all other ranks.

    An endpoint belongs to exactly one worker; send and recv block. Messages
    from a given sender arrive exactly once and in send order.
    """

    def __init__(self, rank: int, nranks: int, backend: Backend):
        if nranks < 1:
            raise ConfigurationError(f"nranks must be >= 1, got {nranks}")
        if not 0 <= rank < nranks:
            raise ConfigurationError(f"Rank {rank} outside 0..{nranks - 1}")
        self.rank = rank
        self.nranks = nranks
        self.backend = backend
        self._closed = False
        self._barrier_generation = 0

    # Public API ---------------------------------------------------------

    def send(self, to: int, payload: bytes):
        """Send one whole payload to rank ``to``."""
        self._check_peer(to)
        self._send_frame(to, memoryview(payload).cast("B"))

    def recv(self, source: int) -> bytes:
        """Oldest undelivered payload from rank ``source``."""
        self._check_peer(source)
        return self._recv_frame(source)

    def recv_into(self, source: int, buffer) -> int:
        """
        Receive one payload from ``source`` directly into ``buffer``.

        Args:
            source: Sending rank
            buffer: Writable buffer whose size equals the expected payload size

        Returns:
            Number of bytes received

        Raises:
            ProtocolError: If the payload length differs from the buffer size
        """
        self._check_peer(source)
        view = memoryview(buffer).cast("B")
        if view.readonly:
            raise ConfigurationError("recv_into needs a writable buffer")
        self._recv_frame_into(source, view)
        return view.nbytes

    def barrier(self):
        """
        Block until every rank has entered the barrier.

        Ranks report to rank 0, which releases everyone once all have arrived.
        Each call uses a fresh generation number so consecutive barriers
        cannot be confused.
        """
        self._barrier_generation += 1
        if self.nranks == 1:
            return
        token = BARRIER_TOKEN.pack(self._barrier_generation)
        if self.rank == 0:
            for peer in range(1, self.nranks):
                self._expect_token(self.recv(peer), peer)
            for peer in range(1, self.nranks):
                self.send(peer, token)
        else:
            self.send(0, token)
            self._expect_token(self.recv(0), 0)
        logger.debug(f"Rank {self.rank} passed barrier {self._barrier_generation}")

    def close(self):
        """Release the connections; calling it again is a no-op."""
        if self._closed:
            return
        self._closed = True
        self._close()
        logger.debug(f"Rank {self.rank} endpoint closed")

    @property
    def closed(self) -> bool:
        return self._closed

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    # Helpers ------------------------------------------------------------

    def _check_peer(self, peer: int):
        if self._closed:
            raise TransportConnectionError(f"Rank {self.rank} endpoint is closed")
        if not 0 <= peer < self.nranks:
            raise ConfigurationError(f"Peer {peer} outside 0..{self.nranks - 1}")
        if peer == self.rank:
            raise ConfigurationError(f"Rank {self.rank} cannot message itself")

    def _expect_token(self, payload: bytes, peer: int):
        if len(payload) != BARRIER_TOKEN.size:
            raise ProtocolError(f"Barrier token from rank {peer} has {len(payload)} bytes")
        (generation,) = BARRIER_TOKEN.unpack(payload)
        if generation != self._barrier_generation:
            raise ProtocolError(
                f"Barrier generation mismatch from rank {peer}: "
                f"expected {self._barrier_generation}, got {generation}"
            )

    # Backend hooks ------------------------------------------------------

    @abstractmethod
    def _send_frame(self, to: int, payload: memoryview):
        """Transmit header + payload to ``to``."""

    @abstractmethod
    def _recv_frame(self, source: int) -> bytes:
        """Return the next payload from ``source``."""

    @abstractmethod
    def _recv_frame_into(self, source: int, view: memoryview):
        """Write the next payload from ``source`` into ``view`` (sizes must match)."""

    @abstractmethod
    def _close(self):
        """Backend-specific teardown."""
