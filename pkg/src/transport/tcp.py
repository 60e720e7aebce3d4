"""
TCP Transport

Rank 0 acts as coordinator. Every worker opens its own listener, connects to
the coordinator and introduces itself:

    worker -> coordinator:  "LFTX" | u32 version | u32 rank | u32 len | "host:port"
    coordinator -> worker:  u32 nranks | nranks x (u32 len | "host:port")

The coordinator connection doubles as the data link between rank 0 and the
worker. Workers then link up pairwise: the higher rank connects to the lower
rank's listener and sends "LFTX" | u32 version | u32 rank. All integers are
little-endian. Setup is bounded by a handshake timeout; established links block
without timeout.
"""

import logging
import socket
import struct
import time
from typing import Dict, List, Optional, Tuple

from src.shared.errors import ConfigurationError, ProtocolError, TransportConnectionError
from src.shared.settings import GlobalSettings
from src.transport.endpoint import (
    FRAME_HEADER,
    Backend,
    TransportEndpoint,
    decode_frame_header,
    encode_frame_header,
)

logger = logging.getLogger(__name__)

HELLO = struct.Struct("<4sII")
U32 = struct.Struct("<I")


def parse_address(address: str) -> Tuple[str, int]:
    """
    Split "host:port".

    Raises:
        ConfigurationError: If the address is malformed
    """
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ConfigurationError(f"Address must look like host:port, got {address!r}")
    try:
        port_number = int(port)
    except ValueError:
        raise ConfigurationError(f"Invalid port in address {address!r}")
    if not 0 <= port_number <= 65535:
        raise ConfigurationError(f"Port out of range in address {address!r}")
    return host, port_number


def _recv_exact_into(sock: socket.socket, view: memoryview, peer: str):
    received = 0
    while received < view.nbytes:
        try:
            n = sock.recv_into(view[received:])
        except socket.timeout:
            raise TransportConnectionError(f"Timed out waiting for {peer}")
        except OSError as e:
            raise TransportConnectionError(f"Connection to {peer} failed: {e}")
        if n == 0:
            raise TransportConnectionError(f"{peer} closed the connection")
        received += n


def _recv_exact(sock: socket.socket, size: int, peer: str) -> bytes:
    buffer = bytearray(size)
    _recv_exact_into(sock, memoryview(buffer), peer)
    return bytes(buffer)


def _send_all(sock: socket.socket, data, peer: str):
    try:
        sock.sendall(data)
    except OSError as e:
        raise TransportConnectionError(f"Sending to {peer} failed: {e}")


def _encode_string(text: str) -> bytes:
    raw = text.encode("utf-8")
    return U32.pack(len(raw)) + raw


def _decode_string(sock: socket.socket, peer: str) -> str:
    (length,) = U32.unpack(_recv_exact(sock, U32.size, peer))
    try:
        return _recv_exact(sock, length, peer).decode("utf-8")
    except UnicodeDecodeError:
        raise ProtocolError(f"{peer} sent a non UTF-8 address")


def _encode_hello(rank: int) -> bytes:
    settings = GlobalSettings.TransportSettings
    return HELLO.pack(settings.PROTOCOL_MAGIC, settings.PROTOCOL_VERSION, rank)


def _decode_hello(sock: socket.socket, peer: str) -> int:
    settings = GlobalSettings.TransportSettings
    magic, version, rank = HELLO.unpack(_recv_exact(sock, HELLO.size, peer))
    if magic != settings.PROTOCOL_MAGIC:
        raise ProtocolError(f"{peer} sent bad magic {magic!r}")
    if version != settings.PROTOCOL_VERSION:
        raise ProtocolError(f"{peer} speaks protocol version {version}, expected {settings.PROTOCOL_VERSION}")
    return rank


class TcpEndpoint(TransportEndpoint):
    """
    Endpoint with one TCP connection per peer.

    Use ``TcpEndpoint.connect(...)`` to run the handshake.
    """

    def __init__(self, rank: int, nranks: int, peers: Dict[int, socket.socket]):
        super().__init__(rank, nranks, Backend.TCP)
        self._peers = peers

    @classmethod
    def connect(
        cls,
        rank: int,
        nranks: int,
        coordinator: str,
        listen_host: str = "127.0.0.1",
        listen_port: int = 0,
        handshake_timeout: Optional[float] = None,
    ) -> "TcpEndpoint":
        """
        Establish all-to-all connectivity.

        Args:
            rank: This rank (0 is the coordinator)
            nranks: Total number of ranks, identical on every participant
            coordinator: "host:port" rank 0 listens on
            listen_host: Interface workers listen on and advertise
            listen_port: Worker listen port (0 picks a free one)
            handshake_timeout: Setup deadline in seconds (default 30)

        Raises:
            TransportConnectionError: Peer unreachable or handshake timeout
            ProtocolError: Bad magic or protocol version
            ConfigurationError: Rank collision or nranks mismatch
        """
        if nranks < 1:
            raise ConfigurationError(f"nranks must be >= 1, got {nranks}")
        if not 0 <= rank < nranks:
            raise ConfigurationError(f"Rank {rank} outside 0..{nranks - 1}")
        if handshake_timeout is None:
            handshake_timeout = GlobalSettings.TransportSettings.HANDSHAKE_TIMEOUT
        deadline = time.monotonic() + handshake_timeout
        coordinator_host, coordinator_port = parse_address(coordinator)

        if nranks == 1:
            peers: Dict[int, socket.socket] = {}
        elif rank == 0:
            peers = cls._coordinate(nranks, coordinator_host, coordinator_port, coordinator, deadline)
        else:
            peers = cls._join(rank, nranks, coordinator_host, coordinator_port, listen_host, listen_port, deadline)

        for sock in peers.values():
            sock.settimeout(None)
        logger.info(f"TCP endpoint rank {rank}/{nranks} connected to {len(peers)} peers")
        return cls(rank, nranks, peers)

    # Handshake ----------------------------------------------------------

    @staticmethod
    def _listen(host: str, port: int) -> socket.socket:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((host, port))
        except OSError as e:
            listener.close()
            raise TransportConnectionError(f"Cannot listen on {host}:{port}: {e}")
        listener.listen()
        return listener

    @staticmethod
    def _accept(listener: socket.socket, deadline: float) -> socket.socket:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise TransportConnectionError("Handshake timed out waiting for peers")
        listener.settimeout(remaining)
        try:
            sock, _ = listener.accept()
        except socket.timeout:
            raise TransportConnectionError("Handshake timed out waiting for peers")
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(max(0.001, deadline - time.monotonic()))
        return sock

    @staticmethod
    def _dial(host: str, port: int, deadline: float) -> socket.socket:
        interval = GlobalSettings.TransportSettings.CONNECT_RETRY_INTERVAL
        last_error: Optional[OSError] = None
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TransportConnectionError(f"Cannot reach {host}:{port}: {last_error}")
            try:
                sock = socket.create_connection((host, port), timeout=remaining)
            except OSError as e:
                last_error = e
                time.sleep(min(interval, max(0.0, deadline - time.monotonic())))
                continue
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.settimeout(max(0.001, deadline - time.monotonic()))
            return sock

    @classmethod
    def _coordinate(
        cls, nranks: int, host: str, port: int, own_address: str, deadline: float
    ) -> Dict[int, socket.socket]:
        listener = cls._listen(host, port)
        peers: Dict[int, socket.socket] = {}
        addresses: List[Optional[str]] = [own_address] + [None] * (nranks - 1)
        try:
            while len(peers) < nranks - 1:
                sock = cls._accept(listener, deadline)
                try:
                    worker = _decode_hello(sock, "worker")
                    address = _decode_string(sock, f"rank {worker}")
                    if not 1 <= worker < nranks:
                        raise ConfigurationError(f"Worker announced rank {worker}, outside 1..{nranks - 1}")
                    if worker in peers:
                        raise ConfigurationError(f"Two workers claim rank {worker}")
                except Exception:
                    sock.close()
                    raise
                peers[worker] = sock
                addresses[worker] = address
                logger.info(f"Coordinator registered rank {worker} at {address}")

            table = U32.pack(nranks) + b"".join(_encode_string(a) for a in addresses)
            for worker, sock in peers.items():
                _send_all(sock, table, f"rank {worker}")
        except Exception:
            for sock in peers.values():
                sock.close()
            raise
        finally:
            listener.close()
        return peers

    @classmethod
    def _join(
        cls,
        rank: int,
        nranks: int,
        coordinator_host: str,
        coordinator_port: int,
        listen_host: str,
        listen_port: int,
        deadline: float,
    ) -> Dict[int, socket.socket]:
        listener = cls._listen(listen_host, listen_port)
        advertised = f"{listen_host}:{listener.getsockname()[1]}"
        peers: Dict[int, socket.socket] = {}
        try:
            coordinator = cls._dial(coordinator_host, coordinator_port, deadline)
            peers[0] = coordinator
            _send_all(coordinator, _encode_hello(rank) + _encode_string(advertised), "coordinator")

            (announced,) = U32.unpack(_recv_exact(coordinator, U32.size, "coordinator"))
            if announced != nranks:
                raise ConfigurationError(f"Coordinator runs {announced} ranks, this worker expects {nranks}")
            addresses = [_decode_string(coordinator, "coordinator") for _ in range(nranks)]

            # Connect down to lower workers, then accept the higher ones
            for lower in range(1, rank):
                host, port = parse_address(addresses[lower])
                sock = cls._dial(host, port, deadline)
                peers[lower] = sock
                _send_all(sock, _encode_hello(rank), f"rank {lower}")
            while len(peers) < nranks - 1:
                sock = cls._accept(listener, deadline)
                try:
                    higher = _decode_hello(sock, "peer")
                    if not rank < higher < nranks or higher in peers:
                        raise ConfigurationError(f"Unexpected peer rank {higher} at rank {rank}")
                except Exception:
                    sock.close()
                    raise
                peers[higher] = sock
        except Exception:
            for sock in peers.values():
                sock.close()
            raise
        finally:
            listener.close()
        return peers

    # Frames -------------------------------------------------------------

    def _send_frame(self, to: int, payload: memoryview):
        sock = self._peers[to]
        _send_all(sock, encode_frame_header(payload.nbytes), f"rank {to}")
        if payload.nbytes:
            _send_all(sock, payload, f"rank {to}")

    def _read_length(self, source: int) -> int:
        header = _recv_exact(self._peers[source], FRAME_HEADER.size, f"rank {source}")
        return decode_frame_header(header)

    def _recv_frame(self, source: int) -> bytes:
        length = self._read_length(source)
        return _recv_exact(self._peers[source], length, f"rank {source}")

    def _recv_frame_into(self, source: int, view: memoryview):
        length = self._read_length(source)
        if length != view.nbytes:
            raise ProtocolError(f"Expected {view.nbytes} bytes from rank {source}, got {length}")
        _recv_exact_into(self._peers[source], view, f"rank {source}")

    def _close(self):
        for sock in self._peers.values():
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
        self._peers.clear()
