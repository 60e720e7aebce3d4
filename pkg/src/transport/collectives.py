"""Small collectives built on point-to-point messages, rooted at rank 0."""

import struct
from typing import List, Optional

from src.transport.endpoint import TransportEndpoint

_DOUBLE = struct.Struct("<d")


def gather(endpoint: TransportEndpoint, payload: bytes) -> Optional[List[bytes]]:
    """Rank 0 returns every rank's payload in rank order; others return None."""
    if endpoint.rank != 0:
        endpoint.send(0, payload)
        return None
    return [payload] + [endpoint.recv(peer) for peer in range(1, endpoint.nranks)]


def broadcast(endpoint: TransportEndpoint, payload: Optional[bytes] = None) -> bytes:
    """Rank 0's payload, delivered to every rank."""
    if endpoint.rank != 0:
        return endpoint.recv(0)
    for peer in range(1, endpoint.nranks):
        endpoint.send(peer, payload)
    return payload


def allreduce_max(endpoint: TransportEndpoint, value: float) -> float:
    """Global maximum of one float per rank, identical on every rank."""
    parts = gather(endpoint, _DOUBLE.pack(value))
    result = None
    if parts is not None:
        result = _DOUBLE.pack(max(_DOUBLE.unpack(p)[0] for p in parts))
    return _DOUBLE.unpack(broadcast(endpoint, result))[0]
