"""
Shared helpers for multi-rank tests
"""

import socket
import threading
from contextlib import closing
from typing import Any, Callable, Dict, List, Tuple

import sys
import os

# Add the parent directory to the path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.transport.endpoint import TransportEndpoint
from src.transport.tcp import TcpEndpoint


def free_port() -> int:
    with closing(socket.socket(socket.AF_INET, socket.SOCK_STREAM)) as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def run_threads(nranks: int, target: Callable[[int], Any], timeout: float = 60.0) -> List[Any]:
    """Run ``target(rank)`` on one thread per rank and re-raise the first failure."""
    results: List[Any] = [None] * nranks
    failures: List[BaseException] = []
    lock = threading.Lock()

    def worker(rank: int):
        try:
            results[rank] = target(rank)
        except BaseException as e:
            with lock:
                failures.append(e)

    threads = [threading.Thread(target=worker, args=(r,), daemon=True) for r in range(nranks)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join(timeout)
    if any(thread.is_alive() for thread in threads):
        raise TimeoutError(f"Ranks still running after {timeout} s")
    if failures:
        raise failures[0]
    return results


def run_tcp(
    nranks: int,
    target: Callable[[TransportEndpoint], Any],
    timeout: float = 60.0,
    handshake_timeout: float = 20.0,
) -> List[Any]:
    """Run ``target(endpoint)`` once per rank over localhost TCP."""
    coordinator = f"127.0.0.1:{free_port()}"

    def rank_main(rank: int):
        endpoint = TcpEndpoint.connect(rank, nranks, coordinator, handshake_timeout=handshake_timeout)
        with endpoint:
            return target(endpoint)

    return run_threads(nranks, rank_main, timeout)


class RendezvousBoard:
    """Per-pair semaphores that make sends wait until the receiver has the message."""

    def __init__(self, nranks: int, limit: float = 30.0):
        self.limit = limit
        self._taken: Dict[Tuple[int, int], threading.Semaphore] = {
            (src, dst): threading.Semaphore(0)
            for src in range(nranks)
            for dst in range(nranks)
            if src != dst
        }

    def wait_taken(self, src: int, dst: int):
        if not self._taken[(src, dst)].acquire(timeout=self.limit):
            raise TimeoutError(f"Rank {dst} never took the message from rank {src}")

    def mark_taken(self, src: int, dst: int):
        self._taken[(src, dst)].release()


class RendezvousEndpoint:
    """
    Endpoint decorator with synchronous sends.

    In-process channels buffer without limit, which would hide a plan that
    only works because sends never block.
    """

    def __init__(self, inner: TransportEndpoint, board: RendezvousBoard):
        self.inner = inner
        self.board = board

    @property
    def rank(self) -> int:
        return self.inner.rank

    @property
    def nranks(self) -> int:
        return self.inner.nranks

    def send(self, to: int, payload: bytes):
        self.inner.send(to, payload)
        self.board.wait_taken(self.rank, to)

    def recv(self, source: int) -> bytes:
        payload = self.inner.recv(source)
        self.board.mark_taken(source, self.rank)
        return payload

    def recv_into(self, source: int, buffer) -> int:
        n = self.inner.recv_into(source, buffer)
        self.board.mark_taken(source, self.rank)
        return n

    def barrier(self):
        self.inner.barrier()

    def close(self):
        self.inner.close()

    @property
    def closed(self) -> bool:
        return self.inner.closed


def rendezvous_wrapper(nranks: int, limit: float = 30.0) -> Callable[[TransportEndpoint], RendezvousEndpoint]:
    board = RendezvousBoard(nranks, limit)
    return lambda endpoint: RendezvousEndpoint(endpoint, board)

